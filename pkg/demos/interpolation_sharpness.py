"""How close the velocity interpolation inequality comes to equality.

Uniform balls sit at a fixed ratio below one; random piecewise-constant
densities scatter below it. Both ratios are unchanged under dilation.
"""

import numpy as np

from vpcharge import estimates as est

a, b = 0.0, 2.0
print(f"C({a:g},{b:g}) = {est.interpolation_constant(a, b):.6f}")
ball = est.check_interpolation_moment(est.UniformBallDensity(1.0, 1.0), a, b)
print(f"uniform ball ratio        {ball.worst_ratio:.6f}")

rng = np.random.default_rng(0)
ratios = [est.check_interpolation_moment(est.random_grid_density(rng), a, b).worst_ratio
          for _ in range(200)]
print(f"random densities: max {max(ratios):.4f}, median {np.median(ratios):.4f}")

d = est.random_grid_density(rng)
for lam in (0.25, 1.0, 4.0):
    r = est.check_interpolation_moment(d.dilated(lam), a, b).worst_ratio
    print(f"dilation {lam:5.2f}: ratio {r:.12f}")

for p in (est.PhaseSpaceBall(1.0, 1.0), est.PhaseSpaceBall(3.0, 0.2, 5.0)):
    print(f"{p}: rho interpolation ratio {est.check_rho_interpolation(p, b=2.0).worst_ratio:.6f}")

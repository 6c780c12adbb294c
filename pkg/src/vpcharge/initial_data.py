"""Analytic initial densities, their phase-space moments and particle sampling.

Both profile kinds share the form

    f0(x, v) = A exp(-|x - c|^2 / (2 r_s^2)) exp(-|v|^2 / (2 theta)) g(r) ramp(r),

with r = |x - xi0| the distance to the charge. ``maxwellian_bump`` has
g = 1; ``power_vicinity`` has g(r) = (r / (1 + r))^beta, which vanishes like
r^beta at the charge. ``ramp`` is 0 for r <= eps, the quintic smoothstep
S((r - eps)/eps) on (eps, 2 eps) and 1 beyond, so f0 vanishes on the
eps-ball around the charge.

Admissible moment order: for eps = 0 the weighted moment
iint (|v|^2 + 1/r)^(m/2) f0 behaves like int_0 r^(2 + beta - m/2) dr near the
charge, finite exactly when m < 6 + 2 beta (beta = 0 for the bump). For
eps > 0 every moment is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ParticleEnsemble

KINDS = ("maxwellian_bump", "power_vicinity")


class DivergentMomentError(ValueError):
    """The requested initial moment is infinite for this profile."""


class SamplingError(RuntimeError):
    """Rejection sampling cannot make progress with the configured envelope."""


def smoothstep(p):
    p = np.clip(p, 0.0, 1.0)
    return p ** 3 * (10.0 - 15.0 * p + 6.0 * p * p)


def hole_ramp(r, eps: float):
    """0 on [0, eps], smoothstep on (eps, 2 eps), 1 on [2 eps, inf)."""
    r = np.asarray(r, dtype=float)
    if eps <= 0:
        return np.ones_like(r)
    return smoothstep((r - eps) / eps)


@dataclass(frozen=True)
class DensityProfile:
    kind: str
    spatial_center: tuple = (0.0, 0.0, 0.0)
    spatial_radius: float = 1.0
    velocity_temperature: float = 1.0
    vicinity_exponent: float = 0.0
    amplitude: float = 1.0
    epsilon_hole: float = 0.0
    charge_position: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        for name in ("spatial_center", "charge_position"):
            v = tuple(float(c) for c in getattr(self, name))
            if len(v) != 3 or not all(math.isfinite(c) for c in v):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, v)
        if not self.spatial_radius > 0:
            raise ValueError("spatial_radius must be positive")
        if not self.velocity_temperature > 0:
            raise ValueError("velocity_temperature must be positive")
        if self.vicinity_exponent < 0:
            raise ValueError("vicinity_exponent must be nonnegative")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.epsilon_hole < 0:
            raise ValueError("epsilon_hole must be nonnegative")

    @property
    def beta(self) -> float:
        return self.vicinity_exponent if self.kind == "power_vicinity" else 0.0

    @property
    def admissible_m0(self) -> float:
        """Supremum of orders m with a finite initial moment."""
        if self.epsilon_hole > 0:
            return math.inf
        return 6.0 + 2.0 * self.beta

    def spatial_factor(self, x):
        x = np.asarray(x, dtype=float)
        d2 = np.sum((x - np.asarray(self.spatial_center)) ** 2, axis=-1)
        r = np.linalg.norm(x - np.asarray(self.charge_position), axis=-1)
        return np.exp(-0.5 * d2 / self.spatial_radius ** 2) * self.charge_factor(r)

    def charge_factor(self, r):
        """g(r) ramp(r), the acceptance probability of the Gaussian proposal."""
        r = np.asarray(r, dtype=float)
        g = (r / (1.0 + r)) ** self.beta if self.beta > 0 else np.ones_like(r)
        return g * hole_ramp(r, self.epsilon_hole)


def evaluate(profile: DensityProfile, x, v):
    """f0(x, v); broadcasts over leading axes of x and v."""
    v = np.asarray(v, dtype=float)
    vel = np.exp(-0.5 * np.sum(v * v, axis=-1) / profile.velocity_temperature)
    out = profile.amplitude * profile.spatial_factor(x) * vel
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class MomentEstimate:
    value: float
    error: float
    levels: list = field(default_factory=list)

    def __float__(self):
        return self.value


def _speed_integral(theta: float, q: np.ndarray, m: float, n_u: int) -> np.ndarray:
    """4 pi int_0^umax u^2 (u^2 + q)^(m/2) exp(-u^2/(2 theta)) du for each q."""
    u_max = math.sqrt(2.0 * theta) * 7.0
    nodes, weights = np.polynomial.legendre.leggauss(n_u)
    u = 0.5 * u_max * (nodes + 1.0)
    wu = 0.5 * u_max * weights * 4.0 * np.pi * u * u * np.exp(-0.5 * u * u / theta)
    if m == 0:
        return np.full(q.shape, wu.sum())
    base = u[None, :] ** 2 + q[:, None]
    return (base ** (0.5 * m)) @ wu


def _shell_quadrature(profile: DensityProfile, m: float, xi0: np.ndarray, level: int) -> float:
    n_r = 256 * 2 ** level
    n_mu = 32 * 2 ** level
    n_u = 64 * 2 ** level
    c = np.asarray(profile.spatial_center)
    axis = c - xi0
    d = float(np.linalg.norm(axis))
    axis = axis / d if d > 0 else np.array([0.0, 0.0, 1.0])
    # the integrand depends on (r, mu) only when the charge factor is centred at xi0
    trivial_factor = profile.beta == 0 and profile.epsilon_hole == 0
    symmetric = trivial_factor or np.array_equal(np.asarray(profile.charge_position), xi0)
    n_phi = 1 if symmetric else 16 * 2 ** level
    # orthonormal frame around the axis
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)

    r_max = d + 10.0 * profile.spatial_radius
    dr = r_max / n_r
    r = (np.arange(n_r) + 0.5) * dr
    mu, wmu = np.polynomial.legendre.leggauss(n_mu)
    phi = (np.arange(n_phi) + 0.5) * (2 * np.pi / n_phi)
    sin_t = np.sqrt(1.0 - mu * mu)
    dirs = (mu[:, None, None] * axis
            + (sin_t[:, None] * np.cos(phi)[None, :])[..., None] * e1
            + (sin_t[:, None] * np.sin(phi)[None, :])[..., None] * e2)   # (n_mu, n_phi, 3)
    ang_w = wmu[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]

    vel = _speed_integral(profile.velocity_temperature, 1.0 / r, m, n_u)
    total = 0.0
    for i in range(n_r):
        pts = xi0 + r[i] * dirs
        s = profile.spatial_factor(pts)
        total += r[i] ** 2 * dr * vel[i] * float(np.sum(s * ang_w))
    return profile.amplitude * total


def initial_moment(profile: DensityProfile, m: float, xi0=None) -> MomentEstimate:
    """iint (|v|^2 + 1/|x - xi0|)^(m/2) f0 dx dv by shell quadrature.

    Three refinement levels (all node counts doubled each time) are
    evaluated; the reported error is the last difference. Growth under
    refinement, or an order at or above the admissible m0, raises
    :class:`DivergentMomentError`.
    """
    if m < 0:
        raise ValueError("moment order must be nonnegative")
    xi0 = np.asarray(profile.charge_position if xi0 is None else xi0, dtype=float)
    levels = [_shell_quadrature(profile, m, xi0, lv) for lv in range(3)]
    d1, d2 = levels[1] - levels[0], levels[2] - levels[1]
    growing = d2 > 0 and d1 > 0 and d2 >= 0.9 * d1
    if np.array_equal(xi0, np.asarray(profile.charge_position)):
        m0 = profile.admissible_m0
    else:
        # the weight is singular at a point where f0 need not vanish
        m0 = 6.0 if profile.spatial_factor(xi0) > 0 else profile.admissible_m0
    if m >= m0:
        trend = "keep growing" if growing else "do not settle"
        raise DivergentMomentError(
            f"initial moment of order m={m} diverges: finite-moment hypothesis requires m < m0 = "
            f"{m0:g}; refinement values {levels[0]:.6g}, {levels[1]:.6g}, {levels[2]:.6g} {trend}")
    return MomentEstimate(levels[-1], abs(d2), levels)


def total_mass(profile: DensityProfile) -> float:
    return initial_moment(profile, 0.0).value


def velocity_moment_quadrature(profile: DensityProfile, k: float, n_u: int = 256) -> float:
    """iint |v|^k f0 dx dv; the velocity factor separates from the spatial one."""
    theta = profile.velocity_temperature
    u_max = math.sqrt(2.0 * theta) * 9.0
    nodes, weights = np.polynomial.legendre.leggauss(n_u)
    u = 0.5 * u_max * (nodes + 1.0)
    g = 0.5 * u_max * weights * u * u * np.exp(-0.5 * u * u / theta)
    return total_mass(profile) * float(np.sum(g * u ** k) / np.sum(g))


def with_mass(profile: DensityProfile, mass: float) -> DensityProfile:
    """Same shape, amplitude rescaled so that the total mass equals ``mass``."""
    if mass < 0:
        raise ValueError("mass must be nonnegative")
    unit = total_mass(replace(profile, amplitude=1.0))
    return replace(profile, amplitude=mass / unit)


def sample(profile: DensityProfile, N: int, seed: int, mass: float | None = None,
           min_acceptance: float = 1e-4) -> ParticleEnsemble:
    """Draw N particles by rejection from the Gaussian envelope.

    Proposals are x ~ N(c, r_s^2 I), v ~ N(0, theta I), accepted with
    probability g(r) ramp(r) <= 1. All weights equal ``mass / N`` where
    ``mass`` defaults to the quadrature mass of the profile.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    c = np.asarray(profile.spatial_center)
    xi0 = np.asarray(profile.charge_position)
    batch = max(2 * N, 4096)
    xs, vs = [], []
    have = 0
    proposed = 0
    accepted = 0
    while have < N:
        x = c + profile.spatial_radius * rng.standard_normal((batch, 3))
        v = math.sqrt(profile.velocity_temperature) * rng.standard_normal((batch, 3))
        u = rng.random(batch)
        p = profile.charge_factor(np.linalg.norm(x - xi0, axis=1))
        keep = u < p
        proposed += batch
        accepted += int(keep.sum())
        xs.append(x[keep])
        vs.append(v[keep])
        have += int(keep.sum())
        if proposed >= 100_000 and accepted < min_acceptance * proposed:
            raise SamplingError(
                f"rejection acceptance rate {accepted / proposed:.2e} is below {min_acceptance:g}; "
                "the Gaussian envelope does not cover the profile")
    pos = np.concatenate(xs)[:N]
    vel = np.concatenate(vs)[:N]
    if mass is None:
        mass = total_mass(profile)
    w = np.full(N, mass / N)
    return ParticleEnsemble(pos, vel, w)

"""How the explicit moment-growth exponent c0(m) depends on m.

c0 is finite on (16/3, 7) and blows up like 1/(7 - m) at the right end;
the product (7 - m) c0(m) stays bounded.
"""

import numpy as np

from vpcharge import constants as cst

print(f"{'m':>6} {'gamma*':>10} {'c0(m)':>12} {'(7-m) c0':>10}")
for m in (5.5, 6.0, 6.25, 6.5, 6.75, 6.9, 6.99):
    g, c0 = cst.c0_minimizer(m)
    print(f"{m:6.2f} {g:10.5f} {c0:12.2f} {(7 - m) * c0:10.2f}")

table = cst.constants_table(6.0, 7.0, T=2.0, f0_l1=0.5)
print()
for k, v in table.as_dict().items():
    print(f"{k:>12} = {v}")

ms = np.linspace(5.4, 6.9, 7)
print("\nadmissible gamma with negative exponent balance:")
for m in ms:
    g = cst.gamma_with_negative_e(m)
    iv = cst.gamma_admissible(m, 7.0)
    print(f"  m={m:.2f}  gamma={g:.4f}  e={cst.e_of(m, g):+.4f}  "
          f"interval=[{iv.lo:g}, {iv.hi:.4f}{']' if iv.hi_closed else ')'}  ({iv.binding})")

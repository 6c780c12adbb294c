"""A point charge moving through a small plasma cloud.

Samples a Maxwellian bump with a hole around the charge, integrates to
T = 1 and plots the energy error, the charge speed and the energy moments.
Writes demos/out/charge_in_plasma.png.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from vpcharge.cli_io import config_from_dict, simulate

OUT = Path(__file__).parent / "out"

cfg = config_from_dict({
    "profile": {"kind": "maxwellian_bump", "epsilon_hole": 0.2, "mass": 0.5},
    "charge": {"eta0": [0.5, 0.0, 0.0]},
    "N": 1500, "seed": 2, "T": 1.0, "dt": 2e-3, "record_every": 10,
})
res = simulate(cfg, write=False)
cols = {c: i for i, c in enumerate(res.columns)}
data = np.array(res.rows)
t = data[:, cols["t"]]
E = data[:, cols["energy"]]
print(f"{len(res.rows)} records in {res.wall_time:.1f} s, {res.substep_flags} substepped particle-steps")
print(f"max relative energy error {np.max(np.abs(E / E[0] - 1)):.2e}")

fig, ax = plt.subplots(1, 3, figsize=(12, 3.5))
ax[0].semilogy(t[1:], np.abs(E[1:] / E[0] - 1))
ax[0].set_title("relative energy error")
ax[1].plot(t, data[:, cols["eta_norm"]])
ax[1].axhline(np.sqrt(2 * E[0]), ls="--", c="k", lw=0.8)
ax[1].set_title("|eta| and sqrt(2 H)")
for k in ("2", "4", "6"):
    ax[2].semilogy(t, data[:, cols[f"H_{k}"]], label=f"H_{k}")
ax[2].legend()
ax[2].set_title("energy moments")
for a in ax:
    a.set_xlabel("t")
fig.tight_layout()
OUT.mkdir(exist_ok=True)
fig.savefig(OUT / "charge_in_plasma.png", dpi=120)

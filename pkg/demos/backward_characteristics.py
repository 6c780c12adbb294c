"""Backward characteristics in the external part of the field.

Runs a short simulation, keeps snapshots as a field history and follows
characteristics backwards from the final time. The flow bounds hold at the
cutoff radius R(T) and break once the radius is shrunk tenfold.
"""

from vpcharge import cli_io
from vpcharge import constants as cst
from vpcharge.dynamics import flow_bound_report

cfg = cli_io.config_from_dict({
    "profile": {"kind": "maxwellian_bump", "epsilon_hole": 0.2, "mass": 0.5},
    "charge": {"eta0": [0.3, 0.0, 0.0]},
    "N": 1000, "seed": 4, "T": 0.5, "dt": 2e-3, "record_every": 25, "snapshot_every": 25,
})
res = cli_io.simulate(cfg, write=False)
table = cst.constants_table(6, 7, cfg.T, f0_l1=cfg.profile.mass)
print(f"R(T) = {table.R_T:.3f}")

for R in (table.R_T, table.R_T / 10):
    hist = cli_io.field_history(res.snapshots, R)
    probes = cli_io.flow_probes(hist, cfg.T, 20, 4, seed=0)
    rep = flow_bound_report(probes, table, cfg.profile.mass)
    print(f"\nR = {R:.3f}: passed={rep.passed()} violated={rep.violated()}")
    for name, ratio in sorted(rep.worst.items()):
        print(f"  {name:>20} {ratio:10.3g}")

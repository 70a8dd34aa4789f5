"""Conservation drift of the constant-coefficient Kawahara equation under dt halving.

u_t + u u_x + u^2 u_x + u_xxx - u_xxxxx = 0 is written as
u_t = u_xxxxx - u_xxx - (u + u^2) u_x, i.e. a = 1, b = -1, c = -1, f = u + u^2.

    python demos/kawahara_drift.py
"""

import numpy as np

from kawahara.solver import Grid, SolverConfig, evolve, relative_drift

print(f"{'dt':>8} {'C1':>10} {'C2':>10} {'C3':>10}")
for dt in (2e-3, 1e-3, 5e-4, 2.5e-4):
    cfg = SolverConfig(grid=Grid(N=256), dt=dt, t_end=1.0, a=1, b=-1, c=-1, f="u + u^2",
                       monitors=("C1", "C2", "C3"), diagnostics_stride=50)
    _, records = evolve(0.5 + 0.5 * np.sin(cfg.grid.x), cfg)
    drifts = [relative_drift(records, n) for n in ("C1", "C2", "C3")]
    print(f"{dt:8.1e} " + " ".join(f"{d:10.2e}" for d in drifts))

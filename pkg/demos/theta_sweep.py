"""Small survival-probability sweep at (0.8, 0.8, 1) with a slope fit.

Pass a trial count to scale it up; the default finishes in about a minute.
"""

import sys

from bipcp import harness, phase
from bipcp.contact import SimConfig

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
cfg = harness.ExperimentConfig(
    0.8, 0.8, 1.0, (0.3, 0.25, 0.2, 0.15), L=2000.0, trials=trials,
    sim=SimConfig(t_max=1e3, escape_size=100), master_seed=0,
)
rows = harness.sweep_theta(cfg, on_row=lambda r: print(f"lambda={r.lam:<5} theta={r.theta_hat:.4f} "
                                                       f"[{r.ci_lo:.4f}, {r.ci_hi:.4f}]"))
fit = harness.fit_slope(rows, target=phase.a_star(0.8, 0.8, 1.0))
print(f"slope {fit.slope:.3f} +- {fit.stderr:.3f}, A* = {fit.target:.4f}")

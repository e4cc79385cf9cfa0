"""A small fixed-deadline sweep: how the split advantage grows as deadlines tighten.

Run: python demos/urgency_sweep.py [runs]
"""

import sys

from dqc_sched.bench import ExperimentConfig, run_sweep
from dqc_sched.solvers import SolverConfig

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 3
cfg = ExperimentConfig(deadline_mode="fixed", request_counts=(4,), monte_carlo_runs=runs)
res = run_sweep(cfg, ["proposed", "shot-agnostic"], SolverConfig())
for d in cfg.d_c_sweep:
    p = res.mean_served("proposed", 4, d)
    s = res.mean_served("shot-agnostic", 4, d)
    print(f"d_c={str(d):>5}  proposed {float(p):.3f}  shot-agnostic {float(s):.3f}  gap {float(p - s):+.3f}")

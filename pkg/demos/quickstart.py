"""Generate one instance, schedule it with every heuristic and draw the proposed schedule.

Run: python demos/quickstart.py [out_dir]
"""

import sys
from pathlib import Path

from dqc_sched.bench import ExperimentConfig, generate_instance, solver_seed
from dqc_sched.feasibility import validate
from dqc_sched.render import render_gantt
from dqc_sched.solvers import SolverConfig, run_variant, solved_instance

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
out.mkdir(parents=True, exist_ok=True)

inst = generate_instance(ExperimentConfig(cut_mix="gate-first:2"), run_index=0, request_count=4)
cfg = SolverConfig(seed=solver_seed(inst.seed))
print(f"{inst.num_circuits} circuits on {inst.num_qpus} QPUs; deadlines {[c.deadline for c in inst.circuits]}")

for variant in ("proposed", "shot-agnostic", "dependency-agnostic", "greedy", "list", "random"):
    res = run_variant(inst, variant, cfg)
    assert validate(solved_instance(inst, variant), res.schedule) == []
    m = res.metrics
    print(f"{variant:<22} served {m.served_count}/{inst.num_circuits}  makespan {m.makespan:>9}  {res.wall_time_ms} ms")
    if variant == "proposed":
        (out / "proposed.svg").write_text(render_gantt(inst, res.schedule, title=variant), encoding="utf-8")

print(f"wrote {out / 'proposed.svg'}")

"""Time arithmetic: per-shot runtimes, completion times, reference bound, deadlines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .model import CircuitRequest, Instance, Schedule, Subcircuit, eligibility_set


class DanglingReference(ValueError):
    """A fragment names a circuit, subcircuit or QPU that does not exist."""


def per_shot_runtime(s: Subcircuit, t1: int, t2: int) -> int:
    """Duration of one shot: single-qubit layers at ``t1`` plus two-qubit layers at ``t2``."""
    return s.single_qubit_layers * t1 + s.two_qubit_layers * t2


def fragment_end(start: int, shots: int, t_per_shot: int, served: bool) -> int:
    if not served:
        return 0
    return start + t_per_shot * shots


@dataclass(frozen=True)
class CompletionReport:
    per_fragment_end: dict = field(default_factory=dict)    # (i, j, m) -> end
    per_subcircuit_end: dict = field(default_factory=dict)  # (i, j) -> end
    per_circuit_end: dict = field(default_factory=dict)     # i -> completion
    makespan: int = 0

    def to_dict(self) -> dict:
        return {
            "circuit_end": [self.per_circuit_end[i] for i in sorted(self.per_circuit_end)],
            "subcircuit_end": [[i, j, e] for (i, j), e in sorted(self.per_subcircuit_end.items())],
            "makespan": self.makespan,
        }


def check_references(inst: Instance, sched: Schedule) -> None:
    if len(sched.served) != inst.num_circuits:
        raise DanglingReference(
            f"schedule has {len(sched.served)} served flags for {inst.num_circuits} circuits"
        )
    for f in sched.fragments:
        if not (0 <= f.circuit_id < inst.num_circuits):
            raise DanglingReference(f"fragment references circuit {f.circuit_id}")
        if not (0 <= f.sub_id < len(inst.circuits[f.circuit_id].subcircuits)):
            raise DanglingReference(f"fragment references subcircuit ({f.circuit_id},{f.sub_id})")
        if not (0 <= f.qpu_id < inst.num_qpus):
            raise DanglingReference(f"fragment references QPU {f.qpu_id}")


def completion_times(inst: Instance, sched: Schedule) -> CompletionReport:
    """Fragment, subcircuit and circuit end times of ``sched``.

    A subcircuit ends with its latest fragment and a circuit with its
    latest subcircuit. Everything belonging to an unserved circuit is 0.
    Zero-shot fragments are treated as absent. If two fragments collide on
    the key ``(i, j, m)``, the later end is kept.
    """
    check_references(inst, sched)
    t1, t2 = inst.gate_times
    frag_end: dict = {}
    sub_end: dict = {}
    for f in sched.fragments:
        if f.shots == 0:
            continue
        served = sched.served[f.circuit_id]
        T = per_shot_runtime(inst.subcircuit(f.circuit_id, f.sub_id), t1, t2)
        e = fragment_end(f.start, f.shots, T, served)
        key = (f.circuit_id, f.sub_id, f.qpu_id)
        frag_end[key] = max(frag_end.get(key, e), e)
        sk = (f.circuit_id, f.sub_id)
        sub_end[sk] = max(sub_end.get(sk, e), e)
    circ_end = {}
    for c in inst.circuits:
        if not sched.served[c.id]:
            circ_end[c.id] = 0
            for s in c.subcircuits:
                sub_end.setdefault((c.id, s.sub_id), 0)
            continue
        circ_end[c.id] = max((sub_end.get((c.id, s.sub_id), 0) for s in c.subcircuits), default=0)
    makespan = max((circ_end[i] for i in circ_end if sched.served[i]), default=0)
    return CompletionReport(frag_end, sub_end, circ_end, makespan)


def reference_time(c: CircuitRequest, inst: Instance) -> int:
    """Idealized completion of ``c`` alone on an idle fleet.

    Each subcircuit's shots are spread as evenly as possible over every
    eligible QPU; the bound is the heaviest path through the precedence DAG.
    """
    t1, t2 = inst.gate_times
    weight = {}
    for s in c.subcircuits:
        n_elig = len(eligibility_set(s, inst.qpus))
        if n_elig == 0:
            raise ValueError(f"subcircuit ({c.id},{s.sub_id}) has no eligible QPU")
        weight[s.sub_id] = per_shot_runtime(s, t1, t2) * math.ceil(s.shots / n_elig)
    finish = {}
    for j in c.precedence.topological_order(weight):
        ready = max((finish[u] for u in c.precedence.preds(j)), default=0)
        finish[j] = ready + weight[j]
    return max(finish.values())


def assign_deadline(c: CircuitRequest, t_ref: int, d_c: Fraction | int | str) -> int:
    """Deadline ``ceil(d_c * t_ref)``; ``d_c`` is exact, so 1.3 * 100 gives 130."""
    d_c = Fraction(d_c)
    if d_c < 1:
        raise ValueError(f"deadline coefficient must be >= 1, got {d_c}")
    return math.ceil(d_c * t_ref)

"""Constraint checking and scoring for candidate schedules.

:func:`validate` is the reference checker every solver is tested against,
so it is written for clarity and works from the raw schedule only.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .model import Instance, Schedule
from .timeline import check_references, per_shot_runtime


class ViolationKind(str, enum.Enum):
    SHOT_CONSERVATION = "ShotConservation"
    DEADLINE_MISS = "DeadlineMiss"
    PRECEDENCE_BREACH = "PrecedenceBreach"
    QPU_OVERLAP = "QpuOverlap"
    NEGATIVE_OR_NON_INTEGRAL = "NegativeOrNonIntegral"
    INELIGIBLE_QPU = "IneligibleQpu"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: tuple
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "subject": list(self.subject), "detail": self.detail}


class InfeasibleSchedule(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        kinds = sorted({v.kind.value for v in self.violations})
        super().__init__(f"schedule has {len(self.violations)} violation(s): {', '.join(kinds)}")


@dataclass(frozen=True)
class Metrics:
    served_count: int
    bonus_count: int
    objective: Fraction
    makespan: int
    served_fraction: Fraction

    def to_dict(self) -> dict:
        return {
            "served_count": self.served_count,
            "bonus_count": self.bonus_count,
            "objective": str(self.objective),
            "makespan": self.makespan,
            "served_fraction": str(self.served_fraction),
        }


def _is_nat(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


def within_bonus(completion: int, deadline: int) -> bool:
    """``completion <= 0.8 * deadline`` in exact integer arithmetic."""
    return 5 * completion <= 4 * deadline


def validate(inst: Instance, sched: Schedule) -> list[Violation]:
    """Every constraint violation in ``sched`` (empty list means feasible).

    Fragments of unserved circuits are reported once as shot-conservation
    violations and otherwise ignored. Fragments whose shots or start are not
    natural numbers are reported as such and left out of the timing checks.
    Zero-shot fragments are treated as absent.
    """
    check_references(inst, sched)
    t1, t2 = inst.gate_times
    out: list[Violation] = []

    timed = []  # (i, j, m, start, end, shots)
    shot_sum = defaultdict(int)
    for f in sched.fragments:
        i, j, m = f.circuit_id, f.sub_id, f.qpu_id
        if not sched.served[i]:
            out.append(Violation(ViolationKind.SHOT_CONSERVATION, (i, j, m),
                                 f"circuit {i} is not served but has a fragment on QPU {m}"))
            continue
        sub = inst.subcircuit(i, j)
        if m not in inst.eligible(i, j):
            out.append(Violation(ViolationKind.INELIGIBLE_QPU, (i, j, m),
                                 f"QPU {m} cannot run subcircuit ({i},{j}) "
                                 f"(needs {sub.qubit_demand} qubits, depth {sub.depth})"))
        ok = True
        for name in ("shots", "start"):
            v = getattr(f, name)
            if not _is_nat(v):
                ok = False
                out.append(Violation(ViolationKind.NEGATIVE_OR_NON_INTEGRAL, (i, j, m),
                                     f"{name}={v!r} is not a nonnegative integer"))
        if isinstance(f.shots, (int, float)) and not isinstance(f.shots, bool):
            shot_sum[(i, j)] += f.shots
        if ok and f.shots > 0:
            T = per_shot_runtime(sub, t1, t2)
            timed.append((i, j, m, f.start, f.start + T * f.shots, f.shots))

    for c in inst.circuits:
        if not sched.served[c.id]:
            continue
        for s in c.subcircuits:
            got = shot_sum.get((c.id, s.sub_id), 0)
            if got != s.shots:
                out.append(Violation(ViolationKind.SHOT_CONSERVATION, (c.id, s.sub_id),
                                     f"subcircuit ({c.id},{s.sub_id}) has {got} of {s.shots} shots allocated"))

    sub_end: dict = {}
    for i, j, m, s, e, y in timed:
        sub_end[(i, j)] = max(sub_end.get((i, j), e), e)

    for c in inst.circuits:
        if not sched.served[c.id]:
            continue
        t_comp = max((sub_end.get((c.id, s.sub_id), 0) for s in c.subcircuits), default=0)
        if t_comp > c.deadline:
            out.append(Violation(ViolationKind.DEADLINE_MISS, (c.id,),
                                 f"circuit {c.id} completes at {t_comp} after deadline {c.deadline}"))

    for i, j, m, s, e, y in timed:
        for u in inst.circuits[i].precedence.preds(j):
            e_u = sub_end.get((i, u), 0)
            if s < e_u:
                out.append(Violation(ViolationKind.PRECEDENCE_BREACH, (i, j, m),
                                     f"fragment of ({i},{j}) on QPU {m} starts at {s} "
                                     f"before predecessor ({i},{u}) completes at {e_u}"))

    lanes = defaultdict(list)
    for i, j, m, s, e, y in timed:
        lanes[m].append((s, e, i, j))
    for m, ivs in sorted(lanes.items()):
        ivs.sort()
        for a in range(len(ivs)):
            for b in range(a + 1, len(ivs)):
                s1, e1, i1, j1 = ivs[a]
                s2, e2, i2, j2 = ivs[b]
                if s2 >= e1:
                    break
                if s2 < e1 and s1 < e2:
                    out.append(Violation(ViolationKind.QPU_OVERLAP, (m, i1, j1, i2, j2),
                                         f"QPU {m}: [{s1},{e1}) of ({i1},{j1}) overlaps [{s2},{e2}) of ({i2},{j2})"))
    return out


def score(inst: Instance, sched: Schedule, alpha: Fraction | int | None = None) -> Metrics:
    """Objective and summary metrics of a feasible schedule.

    Raises:
        InfeasibleSchedule: if :func:`validate` reports anything.
    """
    violations = validate(inst, sched)
    if violations:
        raise InfeasibleSchedule(violations)
    return _score_unchecked(inst, sched, sched.alpha if alpha is None else Fraction(alpha))


def _score_unchecked(inst: Instance, sched: Schedule, alpha: Fraction) -> Metrics:
    t1, t2 = inst.gate_times
    end = defaultdict(int)
    for f in sched.fragments:
        if f.shots == 0:
            continue
        T = per_shot_runtime(inst.subcircuit(f.circuit_id, f.sub_id), t1, t2)
        end[f.circuit_id] = max(end[f.circuit_id], f.start + T * f.shots)
    served = [c for c in inst.circuits if sched.served[c.id]]
    bonus = sum(1 for c in served if within_bonus(end[c.id], c.deadline))
    U = inst.num_circuits
    return Metrics(
        served_count=len(served),
        bonus_count=bonus,
        objective=len(served) + Fraction(alpha) * bonus,
        makespan=max((end[c.id] for c in served), default=0),
        served_fraction=Fraction(len(served), U) if U else Fraction(0),
    )

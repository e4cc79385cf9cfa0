"""Deadline-aware heuristic baselines: greedy (EDF), list scheduling and random.

All three pack fragments left-justified with append semantics (a fragment
starts no earlier than the last interval already placed on its QPU), and
drop a circuit that cannot meet its deadline.
"""

from __future__ import annotations

import random
import time

from ..model import Instance
from ._core import Plan, Problem, even_split
from .base import SolveResult, SolverConfig, finish


def _free_rule(split: bool):
    """Even split over QPUs idle by the precedence-ready time, else the earliest-available one."""

    def rule(avail, T, N, ready):
        free = [m for a, m in avail if a == ready]
        if split and free:
            return even_split(free, N)
        a, m = min(avail)
        return ((m, N),)

    return rule


def _precedence_ready(plan: Plan, i: int, j: int) -> int:
    return max((plan.comp[(i, u)] for u in plan.prob.preds[i][j]), default=0)


def greedy_solve(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    """Earliest deadline first; a circuit that misses its deadline is rolled back."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    prob = Problem(inst, cfg.alpha)
    rule = _free_rule(cfg.allow_shot_split)
    plan = Plan(prob)
    for i in sorted(range(prob.U), key=lambda i: (prob.deadline[i], i)):
        n = len(plan.seq)
        plan.seq.extend((i, j, None) for j in prob.topo[i])
        plan.served.add(i)
        plan.decode(n, rule)
        if plan.circuit_end(i) > prob.deadline[i]:
            plan.remove_circuit(i)
            plan.decode(n)
    return finish(inst, plan.to_schedule(), t0)


def _list_pass(prob: Problem, active: list[int], rule) -> Plan:
    plan = Plan(prob)
    indeg = {(i, j): len(prob.preds[i][j]) for i in active for j in range(prob.k[i])}
    ready = {ij for ij, d in indeg.items() if d == 0}
    qend = [0] * prob.M
    while ready:
        best = None
        for i, j in ready:
            r = _precedence_ready(plan, i, j)
            est = max(r, min(qend[m] for m in prob.elig[i][j]))
            key = (est, prob.deadline[i], i, j)
            if best is None or key < best[0]:
                best = (key, i, j)
        _, i, j = best
        ready.discard((i, j))
        n = len(plan.seq)
        plan.seq.append((i, j, None))
        plan.served.add(i)
        plan.decode(n, rule)
        qend = list(plan.snap[-1])
        for v in prob.succs[i][j]:
            indeg[(i, v)] -= 1
            if indeg[(i, v)] == 0:
                ready.add((i, v))
    return plan


def _drop_until_feasible(prob: Problem, active: list[int], build) -> Plan:
    """Rebuild without the first circuit (by completion) that misses its deadline, until none does."""
    active = list(active)
    while True:
        plan = build(active)
        ends = plan.circuit_ends()
        late = [(ends[i], i) for i in active if ends[i] > prob.deadline[i]]
        if not late:
            return plan
        active.remove(min(late)[1])


def list_solve(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    """Classic list scheduling over the ready set of all circuits at once."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    prob = Problem(inst, cfg.alpha)
    rule = _free_rule(cfg.allow_shot_split)
    plan = _drop_until_feasible(prob, list(range(prob.U)), lambda act: _list_pass(prob, act, rule))
    return finish(inst, plan.to_schedule(), t0)


def _random_alloc(rng, elig, N, split: bool):
    parts = rng.randint(1, min(len(elig), N)) if split else 1
    qpus = sorted(rng.sample(list(elig), parts))
    if parts == 1:
        return ((qpus[0], N),)
    # uniform composition of N into `parts` positive shares
    cuts = sorted(rng.sample(range(1, N), parts - 1))
    shares = [b - a for a, b in zip([0] + cuts, cuts + [N])]
    return tuple(zip(qpus, shares))


def random_solve(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    """Random interleaved topological order, random eligible QPUs and random shot splits."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    prob = Problem(inst, cfg.alpha)
    rng = random.Random(cfg.seed)
    indeg = {(i, j): len(prob.preds[i][j]) for i in range(prob.U) for j in range(prob.k[i])}
    ready = sorted(ij for ij, d in indeg.items() if d == 0)
    seq = []
    while ready:
        i, j = ready.pop(rng.randrange(len(ready)))
        seq.append((i, j, _random_alloc(rng, prob.elig[i][j], prob.N[i][j], cfg.allow_shot_split)))
        for v in prob.succs[i][j]:
            indeg[(i, v)] -= 1
            if indeg[(i, v)] == 0:
                ready.append((i, v))
                ready.sort()

    def build(active):
        keep = set(active)
        plan = Plan(prob, [it for it in seq if it[0] in keep])
        plan.decode(0)
        return plan

    plan = _drop_until_feasible(prob, list(range(prob.U)), build)
    return finish(inst, plan.to_schedule(), t0)

"""Simulated annealing over placement plans.

Neighbors are generated in priority order: add an unserved circuit; failing
that, swap a served circuit for an unserved one; failing that, a local move
on shot splits and start times (reorder a placement, move it to another
QPU, split, merge or re-balance its shots). Infeasible neighbors are
discarded, so the current and best solutions are always feasible.
"""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction

from ..model import Instance, Schedule
from ._core import Plan, Problem, best_single, items_for, random_topo, waterfill
from .exhaustive import allocations, default_granularity
from .base import SolveResult, SolverConfig, finish


def accept(delta: float, tau: float, rng) -> bool:
    """Metropolis rule: improvements and ties always pass, losses with prob ``exp(delta / tau)``."""
    if delta >= 0:
        return True
    return math.exp(delta / tau) > rng.random()


def capped(rule, parts: int | None):
    if parts is None:
        return rule

    def _rule(avail, T, N, ready=0):
        return rule(sorted(avail)[:parts], T, N, ready)

    return _rule


def lattice_rule(table):
    """Earliest-finishing allocation among the fixed candidates ``table[(qpus, N)]``."""

    def _rule(avail, T, N, ready=0):
        at = {m: a for a, m in avail}
        cands = table[(tuple(sorted(at)), N)]
        return min(cands, key=lambda al: (max(at[m] + T * y for m, y in al), len(al), al))

    return _rule


def plan_from_schedule(prob: Problem, sched: Schedule) -> Plan:
    """Rebuild a plan whose packing is no later than ``sched``.

    Placements are ordered by their earliest fragment start. This reproduces
    any schedule with one fragment per subcircuit exactly or better; for
    split schedules the repacked result is checked and rejected if it misses
    a deadline.
    """
    groups: dict = {}
    for f in sched.fragments:
        if f.shots > 0:
            groups.setdefault((f.circuit_id, f.sub_id), []).append(f)
    topo_pos = {(i, j): r for i in range(prob.U) for r, j in enumerate(prob.topo[i])}
    keys = sorted(groups, key=lambda ij: (min(f.start for f in groups[ij]), topo_pos[ij]))
    seq = [(i, j, tuple(sorted((f.qpu_id, f.shots) for f in groups[(i, j)]))) for i, j in keys]
    plan = Plan(prob, seq)
    plan.served = {i for i in range(prob.U) if sched.served[i]}
    plan.decode(0)
    if not plan.feasible():
        raise ValueError("initial schedule cannot be repacked without missing a deadline")
    return plan


class _Annealer:
    def __init__(self, prob: Problem, cfg: SolverConfig, rng):
        self.prob = prob
        self.cfg = cfg
        self.rng = rng
        self.split = cfg.allow_shot_split
        parts = cfg.max_split_parts if self.split else 1
        self.lattice = None
        if self.split and cfg.oracle_moves:
            # same candidate allocations as the exhaustive search
            table = {}
            for i in range(prob.U):
                for j in range(prob.k[i]):
                    e, N = prob.elig[i][j], prob.N[i][j]
                    table[(e, N)] = allocations(e, N, cfg.split_granularity or default_granularity(N))
            self.lattice = table
            parts = 2
        self.parts = parts
        if self.lattice is not None:
            self.rule = lattice_rule(self.lattice)
        else:
            self.rule = capped(waterfill, parts) if self.split else best_single
        self.version = 0
        self.failed_adds: set = set()
        self.failed_appends: set = set()
        self.failed_version = -1

    # -- bookkeeping ------------------------------------------------------

    def key(self, plan: Plan) -> int:
        s, b = plan.counts()
        return self.prob.objective_key(s, b)

    def _repack(self, nb: Plan, pos: int) -> bool:
        return nb.decode(pos, self.rule, abort=True)

    def _positions(self, plan: Plan, i: int) -> dict:
        return {it[1]: k for k, it in enumerate(plan.seq) if it[0] == i}

    # -- priority 1: add ----------------------------------------------------

    def _cached_try(self, cur: Plan, i: int, pos: int, tag: str):
        if tag == "end":
            # appending only depends on the QPU ends, so these failures stay valid
            failed, key = self.failed_appends, (i, cur.snap[-1])
            if len(failed) > 100_000:
                failed.clear()
        else:
            if self.failed_version != self.version:
                self.failed_adds = set()
                self.failed_version = self.version
            failed, key = self.failed_adds, (tag, i)
        if key in failed:
            return None
        if self._hopeless(cur, i, pos):
            return None
        nb = cur.copy()
        nb.seq[pos:pos] = items_for(self.prob, i)
        nb.served.add(i)
        if self._repack(nb, pos):
            return nb
        failed.add(key)
        return None

    def _hopeless(self, cur: Plan, i: int, pos: int) -> bool:
        """True if circuit ``i`` inserted at ``pos`` must miss its deadline.

        Items before ``pos`` are untouched by an insertion, so ``snap[pos]``
        is exactly the QPU state the inserted circuit sees.
        """
        return self.prob.append_lower_bound(i, cur.snap[pos]) > self.prob.deadline[i]

    def _edf_position(self, cur: Plan, i: int) -> int:
        """Just before the first placement of a circuit with a later deadline."""
        dl = self.prob.deadline
        key = (dl[i], i)
        for k, it in enumerate(cur.seq):
            if (dl[it[0]], it[0]) > key:
                return k
        return len(cur.seq)

    def _insert(self, cur: Plan, i: int, pos: int):
        if self._hopeless(cur, i, pos):
            return None
        nb = cur.copy()
        nb.seq[pos:pos] = items_for(self.prob, i, random_topo(self.prob, i, self.rng))
        nb.served.add(i)
        return nb if self._repack(nb, pos) else None

    def add(self, cur: Plan, unserved: list):
        order = list(unserved)
        self.rng.shuffle(order)
        n = len(cur.seq)
        for i in order:
            nb = self._cached_try(cur, i, n, "end")
            if nb is None:
                pos = self._edf_position(cur, i)
                if pos < n:
                    nb = self._cached_try(cur, i, pos, "edf")
            if nb is not None:
                return nb
        if cur.seq:
            return self._insert(cur, order[0], self.rng.randrange(n + 1))
        return None

    # -- priority 2: swap ---------------------------------------------------

    def swap(self, cur: Plan, unserved: list):
        x = self.rng.choice(sorted(cur.served))
        y = self.rng.choice(unserved)
        nb = cur.copy()
        pos = nb.remove_circuit(x)
        if self._hopeless(cur, y, pos):
            return None
        nb.seq[pos:pos] = items_for(self.prob, y, random_topo(self.prob, y, self.rng))
        nb.served.add(y)
        return nb if self._repack(nb, pos) else None

    # -- priority 3: local moves ------------------------------------------

    def local(self, cur: Plan):
        moves = [self._shift, self._relocate, self._reassign, self._rebalance]
        if self.split:
            moves += [self._split, self._merge]
        return self.rng.choice(moves)(cur)

    def _shift(self, cur: Plan):
        seq = cur.seq
        if len(seq) < 2:
            return None
        k = self.rng.randrange(len(seq))
        i, j, _ = seq[k]
        pos = self._positions(cur, i)
        lo = max((pos[u] + 1 for u in self.prob.preds[i][j]), default=0)
        hi = min((pos[v] - 1 for v in self.prob.succs[i][j]), default=len(seq) - 1)
        if hi <= lo:
            return None
        new = self.rng.randint(lo, hi - 1)
        if new >= k:
            new += 1
        nb = cur.copy()
        item = nb.seq.pop(k)
        nb.seq.insert(new, item)
        return nb if self._repack(nb, min(k, new)) else None

    def _relocate(self, cur: Plan):
        """Move one served circuit's placements as a block to a random position."""
        i = self.rng.choice(sorted(cur.served))
        nb = cur.copy()
        first = nb.remove_circuit(i)
        nb.served.add(i)
        pos = self.rng.randrange(len(nb.seq) + 1)
        nb.seq[pos:pos] = items_for(self.prob, i, random_topo(self.prob, i, self.rng))
        return nb if self._repack(nb, min(first, pos)) else None

    def _pick(self, cur: Plan, pred):
        cands = [k for k, it in enumerate(cur.seq) if pred(it)]
        return self.rng.choice(cands) if cands else None

    def _commit(self, cur: Plan, k: int, alloc):
        if alloc is not None and self.lattice is not None:
            i, j, _ = cur.seq[k]
            if alloc not in self.lattice[(self.prob.elig[i][j], self.prob.N[i][j])]:
                return None
        nb = cur.copy()
        i, j, _ = nb.seq[k]
        nb.seq[k] = (i, j, alloc)
        return nb if self._repack(nb, k) else None

    def _reassign(self, cur: Plan):
        elig = self.prob.elig
        k = self._pick(cur, lambda it: len(elig[it[0]][it[1]]) > 1)
        if k is None:
            return None
        i, j, alloc = cur.seq[k]
        idx = self.rng.randrange(len(alloc))
        m, y = alloc[idx]
        target = self.rng.choice([q for q in elig[i][j] if q != m])
        shots = dict(alloc)
        del shots[m]
        shots[target] = shots.get(target, 0) + y
        return self._commit(cur, k, tuple(sorted(shots.items())))

    def _split(self, cur: Plan):
        elig = self.prob.elig
        cap = self.parts or 1 << 30

        def ok(it):
            i, j, alloc = it
            return len(alloc) < min(cap, len(elig[i][j])) and any(y >= 2 for _, y in alloc)

        k = self._pick(cur, ok)
        if k is None:
            return None
        i, j, alloc = cur.seq[k]
        if self.lattice is not None:
            m = alloc[0][0]
            cands = [al for al in self.lattice[(elig[i][j], self.prob.N[i][j])]
                     if len(al) == 2 and m in (al[0][0], al[1][0])]
            return self._commit(cur, k, self.rng.choice(cands)) if cands else None
        m, y = self.rng.choice([a for a in alloc if a[1] >= 2])
        used = {q for q, _ in alloc}
        target = self.rng.choice([q for q in elig[i][j] if q not in used])
        moved = self.rng.randint(1, y - 1)
        shots = dict(alloc)
        shots[m] = y - moved
        shots[target] = moved
        return self._commit(cur, k, tuple(sorted(shots.items())))

    def _merge(self, cur: Plan):
        k = self._pick(cur, lambda it: len(it[2]) >= 2)
        if k is None:
            return None
        i, j, alloc = cur.seq[k]
        a, b = self.rng.sample(range(len(alloc)), 2)
        shots = dict(alloc)
        ma, ya = alloc[a]
        mb, yb = alloc[b]
        del shots[mb]
        shots[ma] = ya + yb
        return self._commit(cur, k, tuple(sorted(shots.items())))

    def _rebalance(self, cur: Plan):
        if not cur.seq:
            return None
        k = self.rng.randrange(len(cur.seq))
        return self._commit(cur, k, None)

    # -- makespan polish ----------------------------------------------------

    def polish(self, plan: Plan, key: int, iters: int) -> Plan:
        """Hill-climb on makespan with local moves, never losing objective."""
        mk = plan.makespan()
        for _ in range(iters):
            if not plan.seq:
                break
            nb = self.local(plan)
            if nb is None:
                continue
            nmk = nb.makespan()
            if nmk < mk and self.key(nb) >= key:
                plan, mk = nb, nmk
        return plan

    # -- driver -------------------------------------------------------------

    def neighbor(self, cur: Plan):
        unserved = [i for i in range(self.prob.U) if i not in cur.served]
        if unserved:
            nb = self.add(cur, unserved)
            if nb is not None:
                return nb
            if cur.served:
                nb = self.swap(cur, unserved)
                if nb is not None:
                    return nb
        if cur.seq:
            return self.local(cur)
        return None


def sa_solve(inst: Instance, cfg: SolverConfig | None = None, initial: Schedule | Plan | None = None,
             rng=None) -> SolveResult:
    """Anneal toward a schedule serving as many circuits on time as possible.

    Args:
        inst: the problem instance.
        cfg: solver settings; ``cfg.seed`` seeds the private RNG.
        initial: optional feasible starting point. Defaults to serving nothing.
        rng: replaces the seeded RNG (used to script acceptance decisions in tests).

    Returns:
        The best solution seen. Among equal objectives the smaller makespan wins.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    prob = Problem(inst, cfg.alpha)
    rng = rng or random.Random(cfg.seed)
    ann = _Annealer(prob, cfg, rng)
    if initial is None:
        cur = Plan(prob)
    elif isinstance(initial, Plan):
        cur = initial.copy()
    else:
        cur = plan_from_schedule(prob, initial)
    den = prob.alpha.denominator
    cur_key = ann.key(cur)
    best, best_key, best_mk = cur, cur_key, cur.makespan()

    tau = float(cfg.sa.tau0)
    tau_min = float(cfg.sa.tau_min)
    cooling = float(cfg.sa.cooling)
    deadline = None if cfg.time_budget_ms is None else t0 + cfg.time_budget_ms / 1000
    trace = []
    while tau > tau_min:
        for _ in range(cfg.sa.iters_per_temp):
            nb = ann.neighbor(cur)
            if nb is None:
                continue
            nk = ann.key(nb)
            if accept((nk - cur_key) / den, tau, rng):
                cur, cur_key = nb, nk
                ann.version += 1
                mk = cur.makespan()
                if cur_key > best_key or (cur_key == best_key and mk < best_mk):
                    best, best_key, best_mk = cur, cur_key, mk
        trace.append((tau, Fraction(best_key, den)))
        tau *= cooling
        if deadline is not None and time.perf_counter() > deadline:
            break
    best = ann.polish(best, best_key, cfg.polish_iters)
    return finish(inst, best.to_schedule(), t0, trace)

"""Exact search over left-justified packings, for tiny instances.

The search space is every served set, every precedence-respecting
interleaving of the served circuits' subcircuits, and for each subcircuit
every allocation with one part or two parts at the split granularity. Each
sequence is packed left-justified exactly as the annealer's decoder does,
so the annealer can never beat this search when every subcircuit has at most
two eligible QPUs and the granularity is 1.

Depth-first branch and bound keeps it exact: a branch is cut only when no
completion can meet a deadline or beat the incumbent on (objective,
-makespan). Identical partial states are expanded once. ``max_nodes``
bounds the work; past it the search refuses with :class:`GuardExceeded`.
"""

from __future__ import annotations

import itertools
import time

from ..model import Instance
from ._core import Plan, Problem, waterfill
from .base import GuardExceeded, SolveResult, SolverConfig, finish

MAX_SUBCIRCUITS = 8
MAX_ALLOCATIONS = 24  # candidate allocations per subcircuit
FRONT_CAP = 64


def allocations(elig: tuple[int, ...], N: int, g: int) -> list[tuple]:
    """One-part and two-part allocations of ``N`` shots; split shares are multiples of ``g``."""
    out = [((m, N),) for m in elig]
    for a, b in itertools.combinations(sorted(elig), 2):
        for y in range(g, N, g):
            out.append(((a, y), (b, N - y)))
    return out


def default_granularity(N: int) -> int:
    """1 for up to 10 shots, else at most five split points per QPU pair."""
    return 1 if N <= 10 else -(-N // 5)


class _Search:
    def __init__(self, prob: Problem, cfg: SolverConfig):
        self.prob = prob
        self.max_nodes = cfg.max_nodes
        self.nodes = 0
        g = cfg.split_granularity
        self.allocs = [
            [allocations(prob.elig[i][j], prob.N[i][j], g or default_granularity(prob.N[i][j]))
             for j in range(prob.k[i])]
            for i in range(prob.U)
        ]
        # shortest possible duration of each subcircuit, used in lower bounds
        self.min_dur = [
            [-(-prob.T[i][j] * prob.N[i][j] // min(2, len(prob.elig[i][j]))) for j in range(prob.k[i])]
            for i in range(prob.U)
        ]
        self.work = [[prob.T[i][j] * prob.N[i][j] for j in range(prob.k[i])] for i in range(prob.U)]
        self.only_on = [
            [[j for j in range(prob.k[i]) if prob.elig[i][j] == (m,)] for i in range(prob.U)]
            for m in range(prob.M)
        ]

    def dominated(self, S, placed, comp, qend, ends) -> bool:
        """Record this state unless an earlier state was at least as good.

        Packing is monotone: lowering any QPU end or any predecessor
        completion never delays a later fragment. So a state is dominated
        by one with the same placed set and bonus outlook whose QPU ends
        and pending predecessor completions are all no later.
        """
        prob = self.prob
        flags = tuple(ends[i] <= prob.bonus_limit[i] for i in S)
        sig = (tuple(placed[i] for i in S), flags)
        pending = []
        for i in S:
            for j in sorted(placed[i]):
                if any(v not in placed[i] for v in prob.succs[i][j]):
                    pending.append(comp[(i, j)])
        vec = qend + tuple(pending)
        front = self.front.setdefault(sig, [])
        for other in front:
            if all(a <= b for a, b in zip(other, vec)):
                return True
        front[:] = [o for o in front if not all(a <= b for a, b in zip(vec, o))]
        front.append(vec)
        if len(front) > FRONT_CAP:
            # forgetting states only weakens pruning, never exactness
            del front[0]
        return False

    def tick(self):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise GuardExceeded(f"exhaustive search exceeded {self.max_nodes} nodes")

    def circuit_lb(self, i, placed, comp, qend, cur_end):
        """Lower bound on circuit ``i``'s completion given what is placed so far."""
        prob = self.prob
        lb = cur_end
        est = {}
        for j in prob.topo[i]:
            if j in placed:
                continue
            r = 0
            for u in prob.preds[i][j]:
                r = max(r, comp[(i, u)] if u in placed else est[u])
            start = max(r, min(qend[m] for m in prob.elig[i][j]))
            est[j] = start + self.min_dur[i][j]
            lb = max(lb, est[j])
        return lb

    def run(self, S: tuple[int, ...], incumbent):
        """Best (bonus, -makespan, seq) for serving exactly ``S``, if it beats ``incumbent``."""
        prob = self.prob
        M = prob.M
        self.best = incumbent  # (bonus, makespan, seq) or None
        self.front = {}
        total = sum(len(prob.topo[i]) for i in S)
        placed = {i: frozenset() for i in S}
        self._dfs(S, placed, {}, (0,) * M, {i: 0 for i in S}, [], total, sum(self.work[i][j] for i in S for j in range(prob.k[i])))
        return self.best

    def _dfs(self, S, placed, comp, qend, ends, seq, left, work_left):
        self.tick()
        prob = self.prob
        if left == 0:
            bonus = sum(1 for i in S if ends[i] <= prob.bonus_limit[i])
            mk = max(qend)
            if self.best is None or (bonus, -mk) > (self.best[0], -self.best[1]):
                self.best = (bonus, mk, list(seq))
            return
        if self.dominated(S, placed, comp, qend, ends):
            return

        # bounds
        bonus_ub = 0
        mk_lb = max(max(qend), -(-(sum(qend) + work_left) // prob.M))
        for m in range(prob.M):
            only = sum(self.work[i][j] for i in S for j in self.only_on[m][i] if j not in placed[i])
            mk_lb = max(mk_lb, qend[m] + only)
        for i in S:
            lb = self.circuit_lb(i, placed[i], comp, qend, ends[i])
            if lb > prob.deadline[i]:
                return
            if lb <= prob.bonus_limit[i]:
                bonus_ub += 1
            mk_lb = max(mk_lb, lb)
        if self.best is not None and (bonus_ub, -mk_lb) <= (self.best[0], -self.best[1]):
            return

        for i in S:
            for j in prob.topo[i]:
                if j in placed[i] or any(u not in placed[i] for u in prob.preds[i][j]):
                    continue
                ready = max((comp[(i, u)] for u in prob.preds[i][j]), default=0)
                T = prob.T[i][j]
                avail = [(max(qend[m], ready), m) for m in prob.elig[i][j]]
                first = waterfill(avail, T, prob.N[i][j]) if len(avail) <= 2 else None
                cands = self.allocs[i][j]
                if first in cands:
                    cands = [first] + [a for a in cands if a != first]
                for alloc in cands:
                    q = list(qend)
                    c = ready
                    for m, y in alloc:
                        e = max(q[m], ready) + T * y
                        q[m] = e
                        c = max(c, e)
                    if c > prob.deadline[i]:
                        continue
                    comp[(i, j)] = c
                    old_end = ends[i]
                    ends[i] = max(old_end, c)
                    placed[i] = placed[i] | {j}
                    seq.append((i, j, alloc))
                    self._dfs(S, placed, comp, tuple(q), ends, seq, left - 1, work_left - self.work[i][j])
                    seq.pop()
                    placed[i] = placed[i] - {j}
                    ends[i] = old_end
                    del comp[(i, j)]


def exhaustive_solve(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    """Provably best schedule in the search space described in the module docstring.

    Raises:
        GuardExceeded: more than ``MAX_SUBCIRCUITS`` subcircuits, more than
            ``MAX_ALLOCATIONS`` candidate allocations for some subcircuit, or
            the node budget ``cfg.max_nodes`` runs out.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    prob = Problem(inst, cfg.alpha)
    if sum(prob.k) > MAX_SUBCIRCUITS:
        raise GuardExceeded(f"{sum(prob.k)} subcircuits exceed the limit of {MAX_SUBCIRCUITS}")
    search = _Search(prob, cfg)
    widest = max((len(a) for per_circuit in search.allocs for a in per_circuit), default=0)
    if widest > MAX_ALLOCATIONS:
        raise GuardExceeded(f"a subcircuit has {widest} candidate allocations, above the limit of {MAX_ALLOCATIONS}")
    best_key, best, best_S, best_bonus = None, None, (), 0  # key = (objective key, -makespan)
    for size in range(prob.U, -1, -1):
        # even with every served circuit earning its bonus, a smaller set cannot catch up
        if best_key is not None and prob.objective_key(size, size) < best_key[0]:
            break
        for S in itertools.combinations(range(prob.U), size):
            incumbent = None
            if best_key is not None and len(best_S) == size:
                incumbent = (best_bonus, -best_key[1], best)
            res = search.run(S, incumbent)
            if res is None or res is incumbent:
                continue
            bonus, mk, seq = res
            key = (prob.objective_key(size, bonus), -mk)
            if best_key is None or key > best_key:
                best_key, best, best_S, best_bonus = key, seq, S, bonus
    plan = Plan(prob, best or [])
    plan.decode(0)
    return finish(inst, plan.to_schedule(), t0)

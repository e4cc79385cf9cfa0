"""Shared machinery for the schedulers.

A *plan* is an ordered list of subcircuit placements ``(i, j, alloc)``
where ``alloc`` is a tuple of ``(qpu, shots)`` pairs. Decoding a plan packs
every fragment left-justified: it starts at the later of its subcircuit's
precedence-ready time and its QPU's current end. Plans that list each
circuit's subcircuits in a precedence-respecting order therefore decode to
schedules that satisfy shot conservation, precedence, QPU exclusivity,
integrality and eligibility by construction; only deadlines need checking.
"""

from __future__ import annotations

from fractions import Fraction

from ..cutter import split_shots
from ..model import Fragment, Instance, Schedule, default_alpha
from ..timeline import per_shot_runtime


class Problem:
    """Index-based view of an :class:`Instance` with everything precomputed."""

    def __init__(self, inst: Instance, alpha: Fraction | None = None):
        self.inst = inst
        self.M = inst.num_qpus
        self.U = inst.num_circuits
        self.alpha = Fraction(default_alpha(self.U) if alpha is None else alpha)
        t1, t2 = inst.gate_times
        self.T = []
        self.N = []
        self.elig = []
        self.preds = []
        self.succs = []
        self.topo = []
        self.deadline = []
        self.bonus_limit = []
        for c in inst.circuits:
            self.T.append([per_shot_runtime(s, t1, t2) for s in c.subcircuits])
            self.N.append([s.shots for s in c.subcircuits])
            self.elig.append([tuple(sorted(inst.eligible(c.id, s.sub_id))) for s in c.subcircuits])
            k = len(c.subcircuits)
            self.preds.append([tuple(c.precedence.preds(j)) for j in range(k)])
            self.succs.append([tuple(c.precedence.succs(j)) for j in range(k)])
            self.topo.append(c.precedence.topological_order(range(k)))
            self.deadline.append(c.deadline)
            # T <= 0.8 tau  <=>  5 T <= 4 tau, kept in integers
            self.bonus_limit.append((4 * c.deadline) // 5)
        self.k = [len(n) for n in self.N]
        self.has_edges = [bool(c.precedence.edges) for c in inst.circuits]

    def append_lower_bound(self, i: int, qend) -> int:
        """Earliest completion circuit ``i`` could reach if placed after every QPU end in ``qend``.

        A subcircuit cannot start before its first eligible QPU frees up and
        the busiest of its QPUs runs at least ``ceil(N / |elig|)`` shots.
        """
        est = {}
        T, N, elig, preds = self.T[i], self.N[i], self.elig[i], self.preds[i]
        for j in self.topo[i]:
            r = min(qend[m] for m in elig[j])
            for u in preds[j]:
                if est[u] > r:
                    r = est[u]
            est[j] = r + T[j] * -(-N[j] // len(elig[j]))
        return max(est.values())

    def objective_key(self, served: int, bonus: int) -> int:
        """Objective ``served + alpha * bonus`` scaled to an integer by alpha's denominator."""
        return served * self.alpha.denominator + bonus * self.alpha.numerator

    def objective(self, served: int, bonus: int) -> Fraction:
        return served + self.alpha * bonus


# ---------------------------------------------------------------------------
# Allocation rules
# ---------------------------------------------------------------------------


def waterfill(avail: list[tuple[int, int]], T: int, N: int, ready: int = 0) -> tuple[tuple[int, int], ...]:
    """Split ``N`` shots of duration ``T`` to finish as early as possible.

    Args:
        avail: ``(earliest start, qpu)`` for every usable QPU.
        ready: precedence-ready time (unused; part of the rule signature).

    Returns:
        ``(qpu, shots)`` pairs with positive shots, sorted by QPU id.
    """
    if len(avail) == 1 or T == 0:
        a, m = min(avail)
        return ((m, N),)
    avail = sorted(avail)
    # largest prefix p such that the continuous finish time is not before avail[p-1]
    work = N * T
    total = 0
    p = 0
    for a, _ in avail:
        if p and a * p >= work + total:
            break
        total += a
        p += 1
    use = avail[:p]
    finish = (work + total) // p
    shots = [max(0, (finish - a) // T) for a, _ in use]
    # flooring leaves at most p shots over; give each to whoever would finish earliest
    for _ in range(N - sum(shots)):
        best = min(range(p), key=lambda x: (use[x][0] + T * (shots[x] + 1), use[x][1]))
        shots[best] += 1
    return tuple(sorted((m, y) for (a, m), y in zip(use, shots) if y > 0))


def best_single(avail: list[tuple[int, int]], T: int, N: int, ready: int = 0) -> tuple[tuple[int, int], ...]:
    a, m = min(avail)
    return ((m, N),)


def even_split(qpus: list[int], N: int) -> tuple[tuple[int, int], ...]:
    """Even split over ``qpus`` (at most ``N`` of them), remainder to the first ones."""
    qpus = sorted(qpus)[:N]
    return tuple(zip(qpus, split_shots(N, len(qpus))))


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------


class Plan:
    """A decoded placement sequence.

    ``seq[k] = (i, j, alloc)``. ``snap[k]`` is the QPU end-time vector
    before item ``k``; ``starts[k]`` aligns with ``alloc``; ``comp`` maps
    ``(i, j)`` to its completion. Items whose ``alloc`` is ``None`` get one
    from ``rule`` when decoded.
    """

    __slots__ = ("prob", "seq", "snap", "starts", "comp", "served")

    def __init__(self, prob: Problem, seq=None):
        self.prob = prob
        self.seq = []
        self.snap = [(0,) * prob.M]
        self.starts = []
        self.comp = {}
        self.served = set()
        if seq:
            self.seq = list(seq)
            self.served = {it[0] for it in self.seq}

    def copy(self) -> "Plan":
        p = Plan.__new__(Plan)
        p.prob = self.prob
        p.seq = list(self.seq)
        p.snap = list(self.snap)
        p.starts = list(self.starts)
        p.comp = dict(self.comp)
        p.served = set(self.served)
        return p

    def decode(self, start: int = 0, rule=waterfill, abort: bool = False) -> bool:
        """Pack items from position ``start`` on.

        With ``abort`` the pass stops at the first subcircuit that ends after
        its circuit's deadline and returns False, leaving the plan half
        decoded (callers then discard it). Otherwise returns True.
        """
        prob = self.prob
        dl = prob.deadline
        T, N, elig, preds = prob.T, prob.N, prob.elig, prob.preds
        del self.snap[start + 1:]
        del self.starts[start:]
        qend = list(self.snap[start])
        comp = self.comp
        seq = self.seq
        for k in range(start, len(seq)):
            i, j, alloc = seq[k]
            ready = 0
            for u in preds[i][j]:
                cu = comp[(i, u)]
                if cu > ready:
                    ready = cu
            t = T[i][j]
            if alloc is None:
                avail = [(qend[m] if qend[m] > ready else ready, m) for m in elig[i][j]]
                alloc = rule(avail, t, N[i][j], ready)
                seq[k] = (i, j, alloc)
            c = ready
            st = []
            for m, y in alloc:
                s = qend[m] if qend[m] > ready else ready
                e = s + t * y
                qend[m] = e
                st.append(s)
                if e > c:
                    c = e
            if abort and c > dl[i]:
                return False
            comp[(i, j)] = c
            self.starts.append(tuple(st))
            self.snap.append(tuple(qend))
        return True

    def circuit_end(self, i: int) -> int:
        comp = self.comp
        return max(comp[(i, j)] for j in range(self.prob.k[i]))

    def circuit_ends(self) -> dict[int, int]:
        out = {i: 0 for i in self.served}
        for (i, j), c in self.comp.items():
            if i in self.served and c > out[i]:
                out[i] = c
        return out

    def feasible(self) -> bool:
        dl = self.prob.deadline
        return all(e <= dl[i] for i, e in self.circuit_ends().items())

    def counts(self) -> tuple[int, int]:
        lim = self.prob.bonus_limit
        ends = self.circuit_ends()
        return len(ends), sum(1 for i, e in ends.items() if e <= lim[i])

    def makespan(self) -> int:
        return max(self.snap[-1]) if self.seq else 0

    def remove_circuit(self, i: int) -> int:
        """Drop every item of circuit ``i``; returns the first vacated position (not re-decoded)."""
        first = next(k for k, it in enumerate(self.seq) if it[0] == i)
        self.seq = [it for it in self.seq if it[0] != i]
        for j in range(self.prob.k[i]):
            self.comp.pop((i, j), None)
        self.served.discard(i)
        return first

    def to_schedule(self) -> Schedule:
        prob = self.prob
        frags = []
        for (i, j, alloc), st in zip(self.seq, self.starts):
            for (m, y), s in zip(alloc, st):
                frags.append(Fragment(i, j, m, y, s))
        served = tuple(i in self.served for i in range(prob.U))
        return Schedule(served, tuple(frags), prob.alpha).sorted()


def items_for(prob: Problem, i: int, order=None) -> list:
    """Undecided items of circuit ``i`` in topological order."""
    return [(i, j, None) for j in (order if order is not None else prob.topo[i])]


def random_topo(prob: Problem, i: int, rng) -> list[int]:
    """Uniformly chosen ready subcircuit at each step."""
    k = prob.k[i]
    if not prob.has_edges[i]:
        out = list(range(k))
        rng.shuffle(out)
        return out
    indeg = [len(prob.preds[i][j]) for j in range(k)]
    ready = [j for j in range(k) if indeg[j] == 0]
    out = []
    while ready:
        j = ready.pop(rng.randrange(len(ready)))
        out.append(j)
        for v in prob.succs[i][j]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    return out

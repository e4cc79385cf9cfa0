import itertools
import math
from fractions import Fraction
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqc_sched.model import CutKind
from dqc_sched.solvers import SolverConfig, random_solve
from dqc_sched.timeline import (
    DanglingReference,
    assign_deadline,
    completion_times,
    fragment_end,
    per_shot_runtime,
    reference_time,
)

from conftest import T32, circuit, instance, schedule


@pytest.mark.parametrize("k1,k2,expected", [(2, 3, 32), (0, 0, 0), (10, 10, 110)])
def test_per_shot_runtime(k1, k2, expected):
    sub = SimpleNamespace(single_qubit_layers=k1, two_qubit_layers=k2)
    assert per_shot_runtime(sub, 1, 10) == expected


@pytest.mark.parametrize("args,expected", [
    ((0, 10, 32, True), 320),
    ((123, 45, 67, False), 0),
    ((100, 0, 32, True), 100),
])
def test_fragment_end(args, expected):
    assert fragment_end(*args) == expected


class TestCompletionTimes:
    def test_latest_fragment_wins(self):
        # 190 = 0 + 32*5 + 30 and 170 = 10 + 32*5
        inst = instance([circuit(0, [(*T32, 10)], 1000)], qpus=((20, 20), (20, 20)))
        sched = schedule([True], [(0, 0, 0, 5, 30), (0, 0, 1, 5, 10)])
        rep = completion_times(inst, sched)
        assert rep.per_fragment_end == {(0, 0, 0): 190, (0, 0, 1): 170}
        assert rep.per_circuit_end == {0: 190}
        assert rep.makespan == 190

    def test_unserved_circuit_is_all_zero(self):
        inst = instance([circuit(0, [(*T32, 10), (*T32, 5)], 1000)])
        rep = completion_times(inst, schedule([False], []))
        assert rep.per_circuit_end == {0: 0}
        assert rep.per_subcircuit_end == {(0, 0): 0, (0, 1): 0}
        assert rep.makespan == 0

    def test_dangling_reference(self):
        inst = instance([circuit(0, [(*T32, 10)], 1000)])
        with pytest.raises(DanglingReference):
            completion_times(inst, schedule([True], [(0, 3, 0, 10, 0)]))
        with pytest.raises(DanglingReference):
            completion_times(inst, schedule([True], [(0, 0, 7, 10, 0)]))
        with pytest.raises(DanglingReference):
            completion_times(inst, schedule([True, True], []))

    def test_report_serializes(self, chain_instance, chain_schedule):
        doc = completion_times(chain_instance, chain_schedule).to_dict()
        assert doc == {"circuit_end": [480], "subcircuit_end": [[0, 0, 160], [0, 1, 480]], "makespan": 480}


class TestReferenceTime:
    def test_single_subcircuit_spread_over_five_qpus(self):
        inst = instance([circuit(0, [(*T32, 15_000)], 1)], qpus=[(20, 20)] * 5)
        assert reference_time(inst.circuits[0], inst) == 32 * 3000 == 96_000

    def test_chain_plus_independent_node(self):
        # node weights 100, 200 on the chain and 250 alone (T=1*k1 + 10*k2, one QPU)
        subs = [(10, 9, 1), (10, 19, 1), (10, 24, 1)]
        c = circuit(0, subs, 1, edges=[(0, 1)])
        inst = instance([c], qpus=[(40, 40)])
        weights = [per_shot_runtime(s, 1, 10) for s in c.subcircuits]
        assert weights == [100, 200, 250]
        assert reference_time(c, inst) == 300

    def test_empty_dag_is_the_heaviest_node(self):
        inst = instance([circuit(0, [(*T32, 4)] * 3, 1)])
        assert reference_time(inst.circuits[0], inst) == 128


@pytest.mark.parametrize("t_ref,d_c,expected", [
    (96_000, 3, 288_000),
    (100, 1, 100),
    (100, Fraction(13, 10), 130),
    (100, "1.3", 130),
    (7, Fraction(3, 2), 11),
])
def test_assign_deadline(t_ref, d_c, expected):
    assert assign_deadline(None, t_ref, d_c) == expected


def test_assign_deadline_rejects_coefficients_below_one():
    with pytest.raises(ValueError):
        assign_deadline(None, 100, Fraction(1, 2))


def _longest_path_oracle(c, inst):
    """Every source-to-sink path enumerated explicitly."""
    t1, t2 = inst.gate_times
    w = {}
    for s in c.subcircuits:
        w[s.sub_id] = per_shot_runtime(s, t1, t2) * math.ceil(s.shots / len(inst.eligible(c.id, s.sub_id)))
    best = 0
    nodes = list(w)
    edges = set(c.precedence.edges)
    for r in range(1, len(nodes) + 1):
        for path in itertools.permutations(nodes, r):
            if all((a, b) in edges for a, b in zip(path, path[1:])):
                best = max(best, sum(w[n] for n in path))
    return best


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_reference_time_matches_path_enumeration(data):
    k = data.draw(st.integers(2, 6))
    pairs = k // 2
    perm = data.draw(st.permutations(range(pairs, 2 * pairs)))
    edges = list(zip(range(pairs), perm))
    subs = [(data.draw(st.integers(2, 10)), data.draw(st.integers(3, 10)), data.draw(st.integers(1, 40)),
             data.draw(st.integers(5, 20))) for _ in range(k)]
    c = circuit(0, subs, 1, edges=edges, kind=CutKind.LOCC_WIRE if edges and 2 * pairs == k else CutKind.GATE)
    qpus = [(data.draw(st.integers(5, 20)), 20) for _ in range(data.draw(st.integers(1, 4)))] + [(20, 20)]
    inst = instance([c], qpus=qpus)
    assert reference_time(c, inst) == _longest_path_oracle(c, inst)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), shots=st.lists(st.integers(1, 30), min_size=1, max_size=4))
def test_reference_time_lower_bounds_any_schedule(seed, shots):
    """No schedule of a circuit alone on the fleet finishes before its reference time."""
    subs = [(2 + (n % 5), 3 + (n % 7), n) for n in shots]
    edges = [(0, 1)] if len(subs) == 2 else []
    kind = CutKind.LOCC_WIRE if edges else CutKind.GATE
    c = circuit(0, subs, 10**9, edges=edges, kind=kind)
    inst = instance([c], qpus=[(20, 20), (20, 20), (20, 20)])
    res = random_solve(inst, SolverConfig(seed=seed))
    assert res.schedule.served == (True,)
    assert completion_times(inst, res.schedule).per_circuit_end[0] >= reference_time(c, inst)


@settings(max_examples=50, deadline=None)
@given(extra_shots=st.integers(0, 5), delay=st.integers(0, 100), which=st.integers(0, 2))
def test_completion_times_are_monotone(extra_shots, delay, which):
    c = circuit(0, [(*T32, 10), (*T32, 10)], 1000, edges=[(0, 1)], kind=CutKind.LOCC_WIRE)
    inst = instance([c], qpus=((20, 20), (20, 20)))
    frags = [(0, 0, 0, 5, 0), (0, 0, 1, 5, 0), (0, 1, 0, 10, 160)]
    base = completion_times(inst, schedule([True], frags))
    f = list(frags[which])
    f[3] += extra_shots
    f[4] += delay
    bumped = list(frags)
    bumped[which] = tuple(f)
    after = completion_times(inst, schedule([True], bumped))
    for key, e in base.per_subcircuit_end.items():
        assert after.per_subcircuit_end[key] >= e
    assert after.makespan >= base.makespan


def test_completion_times_is_pure(chain_instance, chain_schedule):
    assert completion_times(chain_instance, chain_schedule) == completion_times(chain_instance, chain_schedule)

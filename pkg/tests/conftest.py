"""Small hand-built instances shared by the test modules."""

from __future__ import annotations

from fractions import Fraction

import pytest

from dqc_sched.model import (
    QPU,
    CircuitRequest,
    CutKind,
    CutMethod,
    Fragment,
    Instance,
    PrecedenceDag,
    Schedule,
    Subcircuit,
)

# (single-qubit layers, two-qubit layers) giving a per-shot runtime of 32 with gate times (1, 10)
T32 = (2, 3)


def circuit(cid, subs, deadline, edges=(), kind=CutKind.GATE, base_shots=10):
    """``subs`` holds ``(k1, k2, shots)`` or ``(k1, k2, shots, qubits)`` tuples."""
    built = []
    for j, s in enumerate(subs):
        k1, k2, shots = s[:3]
        q = s[3] if len(s) > 3 else 5
        built.append(Subcircuit(cid, j, q, k1 + k2, k1, k2, shots))
    k = len(built)
    if kind is CutKind.LOCC_WIRE:
        cut = CutMethod(kind, k, Fraction(9), len(edges))
    else:
        cut = CutMethod(kind, k, Fraction(1), 0)
    return CircuitRequest(cid, cut, tuple(built), PrecedenceDag(tuple(edges)), deadline, base_shots)


def instance(circuits, qpus=((20, 20),), gate_times=(1, 10), seed=0):
    fleet = tuple(QPU(m, q, d) for m, (q, d) in enumerate(qpus))
    return Instance(fleet, tuple(circuits), gate_times, seed)


def schedule(served, frags, alpha=0):
    """``frags`` holds ``(circuit, sub, qpu, shots, start)`` tuples."""
    return Schedule(tuple(served), tuple(Fragment(*f) for f in frags), Fraction(alpha))


@pytest.fixture
def chain_instance():
    """One LOCC-style circuit: subcircuit 0 must finish before 1 starts; two QPUs.

    Each subcircuit runs 10 shots of 32 time units.
    """
    c = circuit(0, [(*T32, 10), (*T32, 10)], deadline=1000, edges=[(0, 1)], kind=CutKind.LOCC_WIRE)
    return instance([c], qpus=((20, 20), (20, 20)))


@pytest.fixture
def chain_schedule():
    """Feasible for ``chain_instance``: 0 split over both QPUs, then 1 on QPU 0."""
    return schedule([True], [(0, 0, 0, 5, 0), (0, 0, 1, 5, 0), (0, 1, 0, 10, 160)], alpha=Fraction(1, 2))


# one (criterion number, passed, detail) entry per acceptance test, printed after the run
ACCEPTANCE = []


def report(number: int, passed: bool, detail: str) -> bool:
    ACCEPTANCE.append((number, passed, detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda e: e[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

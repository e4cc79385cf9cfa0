"""Domain types for the LOCC quantum-cloud scheduling model.

Everything here is immutable. Times and shot counts are plain integers;
sampling overheads, deadline coefficients and the bonus weight are
:class:`fractions.Fraction` so comparisons in the validator stay exact.

Instances and schedules round-trip through JSON (``format_version`` 1);
field names are documented in ``docs/formats.md``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Base class for problems with an instance or schedule document."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class FormatError(InstanceError):
    """The document is not well-formed (bad JSON, missing keys, wrong types)."""


class InvariantError(InstanceError):
    """The document parses but violates a domain invariant."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvariantError(message)


# ---------------------------------------------------------------------------
# Devices and cut methods
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QPU:
    id: int
    qubit_capacity: int
    max_depth: int

    def __post_init__(self):
        _require(self.qubit_capacity >= 1, f"qubit_capacity must be >= 1, got {self.qubit_capacity}")
        _require(self.max_depth >= 1, f"max_depth must be >= 1, got {self.max_depth}")


class CutKind(str, enum.Enum):
    GATE = "gate"
    LOCC_WIRE = "locc_wire"
    LEGACY_WIRE = "legacy_wire"


# (subcircuit count, sampling overhead, precedence edges) per cut kind
DEFAULT_CUTS = {
    CutKind.GATE: (12, Fraction(9), 0),
    CutKind.LOCC_WIRE: (6, Fraction(9), 3),
    CutKind.LEGACY_WIRE: (16, Fraction(16), 0),
}


@dataclass(frozen=True)
class CutMethod:
    kind: CutKind
    subcircuit_count: int
    overhead: Fraction
    precedence_edge_count: int

    def __post_init__(self):
        _require(self.subcircuit_count >= 1, "subcircuit_count must be >= 1")
        _require(self.overhead >= 1, f"overhead must be >= 1, got {self.overhead}")
        _require(self.precedence_edge_count >= 0, "precedence_edge_count must be >= 0")
        if self.kind is CutKind.LOCC_WIRE:
            _require(
                2 * self.precedence_edge_count == self.subcircuit_count,
                "LOCC wire cut needs one measure->prepare edge per subcircuit pair",
            )

    @classmethod
    def default(cls, kind: CutKind | str, overhead: Fraction | int | None = None) -> "CutMethod":
        kind = CutKind(kind)
        k, gamma2, edges = DEFAULT_CUTS[kind]
        return cls(kind, k, Fraction(gamma2 if overhead is None else overhead), edges)

    @property
    def measure_ids(self) -> range:
        """Sub ids of measurement subcircuits (first half) for LOCC wire cuts."""
        if self.kind is not CutKind.LOCC_WIRE:
            return range(0)
        return range(self.precedence_edge_count)

    @property
    def prepare_ids(self) -> range:
        if self.kind is not CutKind.LOCC_WIRE:
            return range(0)
        return range(self.precedence_edge_count, self.subcircuit_count)


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Subcircuit:
    circuit_id: int
    sub_id: int
    qubit_demand: int
    depth: int
    single_qubit_layers: int
    two_qubit_layers: int
    shots: int

    def __post_init__(self):
        _require(self.qubit_demand >= 1, f"qubit_demand must be >= 1, got {self.qubit_demand}")
        _require(self.depth >= 1, f"depth must be >= 1, got {self.depth}")
        _require(self.shots >= 1, f"shots must be >= 1, got {self.shots}")
        _require(
            self.single_qubit_layers >= 0 and self.two_qubit_layers >= 0,
            "layer counts must be nonnegative",
        )
        _require(
            self.single_qubit_layers + self.two_qubit_layers == self.depth,
            f"subcircuit ({self.circuit_id},{self.sub_id}): single_qubit_layers + "
            f"two_qubit_layers = {self.single_qubit_layers + self.two_qubit_layers} != depth {self.depth}",
        )


@dataclass(frozen=True)
class PrecedenceDag:
    """Measure -> prepare ordering constraints inside one circuit.

    ``edges`` holds ``(u, v)`` pairs meaning subcircuit ``u`` must finish all
    of its shots before any fragment of ``v`` starts.
    """

    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        edges = tuple(sorted({(int(u), int(v)) for u, v in self.edges}))
        object.__setattr__(self, "edges", edges)
        for u, v in edges:
            _require(u != v, f"self-edge on subcircuit {u}")
        _require(self._acyclic(), "precedence graph contains a cycle")

    def _acyclic(self) -> bool:
        nodes = {x for e in self.edges for x in e}
        try:
            self.topological_order(nodes)
        except InvariantError:
            return False
        return True

    def vertices(self) -> set[int]:
        return {x for e in self.edges for x in e}

    def preds(self, v: int) -> list[int]:
        return [a for a, b in self.edges if b == v]

    def succs(self, u: int) -> list[int]:
        return [b for a, b in self.edges if a == u]

    def topological_order(self, nodes: Iterable[int]) -> list[int]:
        """Kahn's algorithm; ties broken by ascending sub id."""
        nodes = sorted(set(nodes))
        indeg = {n: 0 for n in nodes}
        for _, v in self.edges:
            if v in indeg:
                indeg[v] += 1
        ready = [n for n in nodes if indeg[n] == 0]
        out = []
        while ready:
            ready.sort()
            n = ready.pop(0)
            out.append(n)
            for v in self.succs(n):
                if v in indeg:
                    indeg[v] -= 1
                    if indeg[v] == 0:
                        ready.append(v)
        if len(out) != len(nodes):
            raise InvariantError("precedence graph contains a cycle")
        return out


@dataclass(frozen=True)
class CircuitRequest:
    id: int
    cut: CutMethod
    subcircuits: tuple[Subcircuit, ...]
    precedence: PrecedenceDag
    deadline: int
    base_shots: int
    deadline_coeff: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "subcircuits", tuple(self.subcircuits))
        # 0 marks a freshly cut circuit whose deadline is not assigned yet
        _require(self.deadline >= 0, f"deadline must be >= 0, got {self.deadline}")
        _require(self.base_shots >= 1, f"base_shots must be >= 1, got {self.base_shots}")
        _require(len(self.subcircuits) >= 1, "circuit has no subcircuits")
        for j, s in enumerate(self.subcircuits):
            _require(s.sub_id == j, f"subcircuits must be listed in sub id order (got {s.sub_id} at {j})")
            _require(s.circuit_id == self.id, f"subcircuit {j} belongs to circuit {s.circuit_id}")
        k = len(self.subcircuits)
        for u, v in self.precedence.edges:
            _require(0 <= u < k and 0 <= v < k, f"precedence edge ({u},{v}) references unknown subcircuit")
        if self.cut.kind is CutKind.LOCC_WIRE and self.precedence.edges:
            srcs = [u for u, _ in self.precedence.edges]
            dsts = [v for _, v in self.precedence.edges]
            _require(len(set(srcs)) == len(srcs) and len(set(dsts)) == len(dsts),
                     "LOCC precedence edges must pair measure and prepare subcircuits one-to-one")

    @property
    def total_shots(self) -> int:
        return sum(s.shots for s in self.subcircuits)


def eligibility_set(s: Subcircuit, qpus: Sequence[QPU]) -> set[int]:
    """QPU ids whose qubit capacity and depth both accommodate ``s``."""
    return {q.id for q in qpus if s.qubit_demand <= q.qubit_capacity and s.depth <= q.max_depth}


@dataclass(frozen=True)
class Instance:
    qpus: tuple[QPU, ...]
    circuits: tuple[CircuitRequest, ...]
    gate_times: tuple[int, int] = (1, 10)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "qpus", tuple(self.qpus))
        object.__setattr__(self, "circuits", tuple(self.circuits))
        object.__setattr__(self, "gate_times", tuple(int(t) for t in self.gate_times))
        _require(len(self.qpus) >= 1, "instance needs at least one QPU")
        for m, q in enumerate(self.qpus):
            _require(q.id == m, f"QPU ids must be dense 0..M-1 (got {q.id} at {m})")
        for i, c in enumerate(self.circuits):
            _require(c.id == i, f"circuit ids must be dense 0..U-1 (got {c.id} at {i})")
        t1, t2 = self.gate_times
        _require(t2 > t1 >= 1, f"gate times must satisfy t2 > t1 >= 1, got {self.gate_times}")
        for c in self.circuits:
            _require(c.deadline >= 1, f"circuit {c.id}: deadline must be >= 1, got {c.deadline}")
            for s in c.subcircuits:
                _require(
                    bool(eligibility_set(s, self.qpus)),
                    f"subcircuit ({c.id},{s.sub_id}) fits on no QPU",
                )

    @property
    def num_qpus(self) -> int:
        return len(self.qpus)

    @property
    def num_circuits(self) -> int:
        return len(self.circuits)

    def subcircuit(self, i: int, j: int) -> Subcircuit:
        return self.circuits[i].subcircuits[j]

    def eligible(self, i: int, j: int) -> set[int]:
        return eligibility_set(self.subcircuit(i, j), self.qpus)


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Fragment:
    """``shots`` shots of subcircuit ``(circuit_id, sub_id)`` run back to back on one QPU.

    Values are not checked on construction: a loaded schedule may be
    malformed, and reporting that is the validator's job.
    """

    circuit_id: int
    sub_id: int
    qpu_id: int
    shots: int
    start: int


@dataclass(frozen=True)
class Schedule:
    served: tuple[bool, ...]
    fragments: tuple[Fragment, ...] = ()
    alpha: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "served", tuple(bool(z) for z in self.served))
        object.__setattr__(self, "fragments", tuple(self.fragments))
        object.__setattr__(self, "alpha", Fraction(self.alpha))

    @classmethod
    def empty(cls, num_circuits: int, alpha: Fraction | int = 0) -> "Schedule":
        return cls((False,) * num_circuits, (), Fraction(alpha))

    def sorted(self) -> "Schedule":
        """Canonical fragment order: (qpu, start, circuit, sub)."""
        frags = sorted(self.fragments, key=lambda f: (f.qpu_id, f.start, f.circuit_id, f.sub_id, f.shots))
        return Schedule(self.served, tuple(frags), self.alpha)


def default_alpha(num_circuits: int) -> Fraction:
    """Bonus weight 1/(U+1): serving one more circuit always beats any bonus gain."""
    return Fraction(1, num_circuits + 1)


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------


def _frac_to_json(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _frac_from_json(v: Any, path: str) -> Fraction:
    if isinstance(v, bool) or not isinstance(v, (int, str, float)):
        raise FormatError(f"expected a rational number, got {v!r}", path)
    try:
        return Fraction(v) if not isinstance(v, float) else Fraction(str(v))
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad rational {v!r}: {exc}", path) from None


def _int(d: dict, key: str, path: str) -> int:
    if key not in d:
        raise FormatError(f"missing key {key!r}", path)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"expected integer, got {v!r}", f"{path}.{key}")
    return v


def _get(d: Any, key: str, path: str, kind: type = object):
    if not isinstance(d, dict):
        raise FormatError("expected an object", path)
    if key not in d:
        raise FormatError(f"missing key {key!r}", path)
    v = d[key]
    if kind is not object and not isinstance(v, kind):
        raise FormatError(f"expected {kind.__name__}, got {type(v).__name__}", f"{path}.{key}")
    return v


def _build(path: str, ctor, *args, **kwargs):
    try:
        return ctor(*args, **kwargs)
    except InvariantError as exc:
        raise InvariantError(str(exc), path) from None


def instance_to_dict(inst: Instance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "seed": inst.seed,
        "gate_times": list(inst.gate_times),
        "qpus": [{"id": q.id, "qubit_capacity": q.qubit_capacity, "max_depth": q.max_depth} for q in inst.qpus],
        "circuits": [
            {
                "id": c.id,
                "cut": {
                    "kind": c.cut.kind.value,
                    "subcircuit_count": c.cut.subcircuit_count,
                    "overhead": _frac_to_json(c.cut.overhead),
                    "precedence_edge_count": c.cut.precedence_edge_count,
                },
                "base_shots": c.base_shots,
                "deadline": c.deadline,
                "deadline_coeff": _frac_to_json(c.deadline_coeff),
                "subcircuits": [
                    {
                        "sub": s.sub_id,
                        "qubit_demand": s.qubit_demand,
                        "depth": s.depth,
                        "single_qubit_layers": s.single_qubit_layers,
                        "two_qubit_layers": s.two_qubit_layers,
                        "shots": s.shots,
                    }
                    for s in c.subcircuits
                ],
                "precedence_edges": [list(e) for e in c.precedence.edges],
            }
            for c in inst.circuits
        ],
    }


def _check_version(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object", "$")
    v = doc.get("format_version", FORMAT_VERSION)
    if v != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {v!r}", "$.format_version")


def instance_from_dict(doc: Any) -> Instance:
    _check_version(doc)
    qpus = []
    for m, q in enumerate(_get(doc, "qpus", "$", list)):
        p = f"$.qpus[{m}]"
        qpus.append(_build(p, QPU, _int(q, "id", p), _int(q, "qubit_capacity", p), _int(q, "max_depth", p)))
    circuits = []
    for i, c in enumerate(_get(doc, "circuits", "$", list)):
        p = f"$.circuits[{i}]"
        cid = _int(c, "id", p)
        cut_d = _get(c, "cut", p, dict)
        try:
            kind = CutKind(_get(cut_d, "kind", f"{p}.cut", str))
        except ValueError:
            raise FormatError(f"unknown cut kind {cut_d['kind']!r}", f"{p}.cut.kind") from None
        cut = _build(
            f"{p}.cut",
            CutMethod,
            kind,
            _int(cut_d, "subcircuit_count", f"{p}.cut"),
            _frac_from_json(_get(cut_d, "overhead", f"{p}.cut"), f"{p}.cut.overhead"),
            _int(cut_d, "precedence_edge_count", f"{p}.cut"),
        )
        subs = []
        for j, s in enumerate(_get(c, "subcircuits", p, list)):
            sp = f"{p}.subcircuits[{j}]"
            subs.append(
                _build(
                    sp,
                    Subcircuit,
                    cid,
                    _int(s, "sub", sp),
                    _int(s, "qubit_demand", sp),
                    _int(s, "depth", sp),
                    _int(s, "single_qubit_layers", sp),
                    _int(s, "two_qubit_layers", sp),
                    _int(s, "shots", sp),
                )
            )
        edges = []
        for e_idx, e in enumerate(_get(c, "precedence_edges", p, list)):
            ep = f"{p}.precedence_edges[{e_idx}]"
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
                raise FormatError("edge must be a [pred, succ] integer pair", ep)
            edges.append((e[0], e[1]))
        dag = _build(f"{p}.precedence_edges", PrecedenceDag, tuple(edges))
        coeff = _frac_from_json(c.get("deadline_coeff", "1"), f"{p}.deadline_coeff")
        circuits.append(
            _build(p, CircuitRequest, cid, cut, tuple(subs), dag, _int(c, "deadline", p), _int(c, "base_shots", p), coeff)
        )
    gt = _get(doc, "gate_times", "$", list)
    if len(gt) != 2 or not all(isinstance(t, int) and not isinstance(t, bool) for t in gt):
        raise FormatError("gate_times must be a pair of integers", "$.gate_times")
    seed = _int(doc, "seed", "$")
    inst = _build("$", Instance, tuple(qpus), tuple(circuits), (gt[0], gt[1]), seed)
    return inst


def load_instance(data: str | bytes) -> Instance:
    """Parse an instance document; raises :class:`FormatError` or :class:`InvariantError`."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed JSON: {exc}", "$") from None
    return instance_from_dict(doc)


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1, sort_keys=False) + "\n"


def schedule_to_dict(sched: Schedule) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "served": list(sched.served),
        "alpha": _frac_to_json(sched.alpha),
        "fragments": [
            {"circuit": f.circuit_id, "sub": f.sub_id, "qpu": f.qpu_id, "shots": f.shots, "start": f.start}
            for f in sched.fragments
        ],
    }


def schedule_from_dict(doc: Any) -> Schedule:
    """Parse a schedule document.

    Shot counts and start times are taken as given (possibly negative or
    fractional) so that the validator can report them.
    """
    _check_version(doc)
    served = _get(doc, "served", "$", list)
    if not all(isinstance(z, bool) for z in served):
        raise FormatError("served must be a list of booleans", "$.served")
    frags = []
    for k, f in enumerate(_get(doc, "fragments", "$", list)):
        p = f"$.fragments[{k}]"
        vals = []
        for key in ("circuit", "sub", "qpu"):
            vals.append(_int(f, key, p))
        for key in ("shots", "start"):
            v = _get(f, key, p)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise FormatError(f"expected a number, got {v!r}", f"{p}.{key}")
            vals.append(v)
        frags.append(Fragment(*vals))
    alpha = _frac_from_json(doc.get("alpha", "0"), "$.alpha")
    return Schedule(tuple(served), tuple(frags), alpha)


def load_schedule(data: str | bytes) -> Schedule:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed JSON: {exc}", "$") from None
    return schedule_from_dict(doc)


def dump_schedule(sched: Schedule, extra: dict | None = None) -> str:
    doc = schedule_to_dict(sched)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1) + "\n"

"""Cloud compiler model: turn a raw request into subcircuits.

No quantum operators are built. A cut is reduced to what the scheduler
sees: how many subcircuits it yields, their sampled resource parameters,
their shot budgets and (for LOCC wire cuts) the measure -> prepare edges.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import (
    QPU,
    CircuitRequest,
    CutKind,
    CutMethod,
    PrecedenceDag,
    Subcircuit,
    eligibility_set,
)

_MAX_SHOTS = 2**63 - 1


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from integer parts (order matters)."""
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]).generate_state(1, np.uint64)[0] >> 1)


def circuit_seed(instance_seed: int, circuit_id: int) -> int:
    """Seed of the raw circuit behind request ``circuit_id``; shared by every cut of it."""
    return derive_seed(instance_seed, 1, circuit_id)


class RejectionCapExceeded(RuntimeError):
    """No eligible subcircuit parameters were found within the attempt cap."""


@dataclass(frozen=True)
class RawCircuit:
    id: int
    cut: CutKind
    base_shots: int
    rng_seed: int

    def __post_init__(self):
        if self.base_shots < 1:
            raise ValueError(f"base_shots must be >= 1, got {self.base_shots}")


@dataclass(frozen=True)
class ParameterDistributions:
    """Inclusive integer ranges for sampled subcircuit parameters."""

    qubit_range: tuple[int, int] = (5, 20)
    depth_range: tuple[int, int] = (5, 20)
    single_layer_range: tuple[int, int] = (2, 10)
    two_layer_range: tuple[int, int] = (3, 10)
    max_attempts: int = 10_000

    def __post_init__(self):
        for name in ("qubit_range", "depth_range", "single_layer_range", "two_layer_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def as_dict(self) -> dict:
        return {
            "qubit_range": list(self.qubit_range),
            "depth_range": list(self.depth_range),
            "single_layer_range": list(self.single_layer_range),
            "two_layer_range": list(self.two_layer_range),
            "max_attempts": self.max_attempts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterDistributions":
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)


def total_shot_budget(n0: int, overhead: Fraction | int) -> int:
    """Shots needed after cutting: ``n0 * overhead`` rounded half up."""
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    overhead = Fraction(overhead)
    if overhead < 1:
        raise ValueError(f"overhead must be >= 1, got {overhead}")
    total = math.floor(n0 * overhead + Fraction(1, 2))
    if total > _MAX_SHOTS:
        raise OverflowError(f"shot budget {n0} * {overhead} does not fit in 64 bits")
    return total


def split_shots(total: int, k: int) -> list[int]:
    """Even split of ``total`` shots over ``k`` subcircuits, remainder to the lowest ids.

    >>> split_shots(10, 3)
    [4, 3, 3]
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if total < k:
        raise ValueError(f"cannot give each of {k} subcircuits a shot from {total}")
    q, r = divmod(total, k)
    return [q + 1 if j < r else q for j in range(k)]


def _sample_subcircuit(rng: random.Random, cid: int, j: int, shots: int,
                       qpus: Sequence[QPU], dist: ParameterDistributions) -> Subcircuit:
    lo1, hi1 = dist.single_layer_range
    lo2, hi2 = dist.two_layer_range
    for _ in range(dist.max_attempts):
        q = rng.randint(*dist.qubit_range)
        d = rng.randint(*dist.depth_range)
        # the layer split must exist for this depth, else resample the depth too
        if not (lo1 + lo2 <= d <= hi1 + hi2):
            continue
        if not any(q <= p.qubit_capacity and d <= p.max_depth for p in qpus):
            continue
        while True:
            k1 = rng.randint(lo1, hi1)
            k2 = d - k1
            if lo2 <= k2 <= hi2:
                break
        sub = Subcircuit(cid, j, q, d, k1, k2, shots)
        assert eligibility_set(sub, qpus)
        return sub
    raise RejectionCapExceeded(
        f"circuit {cid} subcircuit {j}: no eligible parameters after {dist.max_attempts} attempts"
    )


def cut_circuit(raw: RawCircuit, qpus: Sequence[QPU],
                dist: ParameterDistributions | None = None,
                cut: CutMethod | None = None) -> CircuitRequest:
    """Cut ``raw`` and sample its subcircuits.

    The returned request has ``deadline == 0``; deadlines depend on the whole
    fleet and are assigned afterwards (see :mod:`dqc_sched.timeline`).

    Args:
        raw: the request to cut. Its ``rng_seed`` fully determines the result.
        qpus: the fleet, used to reject subcircuits no device can run.
        dist: parameter ranges; defaults to :class:`ParameterDistributions`.
        cut: overrides the default cut parameters for ``raw.cut``.
    """
    dist = dist or ParameterDistributions()
    cut = cut or CutMethod.default(raw.cut)
    if cut.kind is not raw.cut:
        raise ValueError(f"cut method {cut.kind} does not match request kind {raw.cut}")
    rng = random.Random(raw.rng_seed)
    shots = split_shots(total_shot_budget(raw.base_shots, cut.overhead), cut.subcircuit_count)
    subs = tuple(_sample_subcircuit(rng, raw.id, j, n, qpus, dist) for j, n in enumerate(shots))
    edges: tuple[tuple[int, int], ...] = ()
    if cut.kind is CutKind.LOCC_WIRE:
        prepares = list(cut.prepare_ids)
        rng.shuffle(prepares)
        edges = tuple(zip(cut.measure_ids, prepares))
    return CircuitRequest(
        id=raw.id,
        cut=cut,
        subcircuits=subs,
        precedence=PrecedenceDag(edges),
        deadline=0,
        base_shots=raw.base_shots,
    )

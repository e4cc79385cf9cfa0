"""Named solver variants, including the agnostic ablations."""

from __future__ import annotations

import enum
from dataclasses import replace

from ..cutter import ParameterDistributions, RawCircuit, circuit_seed, cut_circuit
from ..model import CutKind, CutMethod, Instance
from .annealing import sa_solve
from .base import SolveResult, SolverConfig
from .baselines import greedy_solve, list_solve, random_solve
from .exhaustive import exhaustive_solve


class Variant(str, enum.Enum):
    PROPOSED = "proposed"
    SHOT_AGNOSTIC = "shot-agnostic"
    DEPENDENCY_AGNOSTIC = "dependency-agnostic"
    DEPENDENCY_AND_SHOT_AGNOSTIC = "dependency-and-shot-agnostic"
    GREEDY = "greedy"
    LIST = "list"
    RANDOM = "random"
    EXHAUSTIVE = "exhaustive"


VARIANT_NAMES = tuple(v.value for v in Variant)


def legacy_wire_instance(inst: Instance, dist: ParameterDistributions | None = None,
                         cut: CutMethod | None = None) -> Instance:
    """Re-cut every LOCC wire-cut circuit with the legacy wire cut.

    The raw circuit behind request ``i`` is identified by
    ``circuit_seed(inst.seed, i)``, so the re-cut consumes the same random
    stream the original cut did. Gate-cut circuits, the fleet and every
    deadline are left unchanged.
    """
    cut = cut or CutMethod.default(CutKind.LEGACY_WIRE)
    circuits = []
    for c in inst.circuits:
        if c.cut.kind is CutKind.LOCC_WIRE:
            raw = RawCircuit(c.id, CutKind.LEGACY_WIRE, c.base_shots, circuit_seed(inst.seed, c.id))
            new = cut_circuit(raw, inst.qpus, dist, cut)
            c = replace(new, deadline=c.deadline, deadline_coeff=c.deadline_coeff)
        circuits.append(c)
    return replace(inst, circuits=tuple(circuits))


def run_variant(inst: Instance, variant: Variant | str, cfg: SolverConfig | None = None,
                dist: ParameterDistributions | None = None, legacy_cut: CutMethod | None = None) -> SolveResult:
    """Solve ``inst`` with one of the eight named methods.

    For the dependency-agnostic variants the returned schedule refers to the
    re-cut instance (see :func:`legacy_wire_instance`), not to ``inst``.

    Args:
        inst: the instance as generated (LOCC wire cuts where applicable).
        variant: a :class:`Variant` or its CLI name.
        cfg: shared settings; ``allow_shot_split`` is overridden by the variant.
        dist: parameter ranges used when re-cutting.
        legacy_cut: the legacy wire cut to re-cut with (default parameters if None).
    """
    v = Variant(variant)
    cfg = cfg or SolverConfig()
    if v is Variant.PROPOSED:
        return sa_solve(inst, cfg.with_(allow_shot_split=True))
    if v is Variant.SHOT_AGNOSTIC:
        return sa_solve(inst, cfg.with_(allow_shot_split=False))
    if v is Variant.DEPENDENCY_AGNOSTIC:
        return sa_solve(legacy_wire_instance(inst, dist, legacy_cut), cfg.with_(allow_shot_split=True))
    if v is Variant.DEPENDENCY_AND_SHOT_AGNOSTIC:
        return sa_solve(legacy_wire_instance(inst, dist, legacy_cut), cfg.with_(allow_shot_split=False))
    cfg = cfg.with_(allow_shot_split=True)
    if v is Variant.GREEDY:
        return greedy_solve(inst, cfg)
    if v is Variant.LIST:
        return list_solve(inst, cfg)
    if v is Variant.RANDOM:
        return random_solve(inst, cfg)
    return exhaustive_solve(inst, cfg)


def solved_instance(inst: Instance, variant: Variant | str, dist: ParameterDistributions | None = None,
                    legacy_cut: CutMethod | None = None) -> Instance:
    """The instance a variant's schedule refers to."""
    if Variant(variant) in (Variant.DEPENDENCY_AGNOSTIC, Variant.DEPENDENCY_AND_SHOT_AGNOSTIC):
        return legacy_wire_instance(inst, dist, legacy_cut)
    return inst

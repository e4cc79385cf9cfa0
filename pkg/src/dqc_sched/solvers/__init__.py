"""Schedulers: simulated annealing, the exhaustive oracle and heuristic baselines."""

from .annealing import sa_solve
from .base import AnnealingSchedule, GuardExceeded, SolveResult, SolverConfig
from .baselines import greedy_solve, list_solve, random_solve
from .exhaustive import exhaustive_solve
from .variants import VARIANT_NAMES, Variant, legacy_wire_instance, run_variant, solved_instance

__all__ = [
    "AnnealingSchedule",
    "GuardExceeded",
    "SolveResult",
    "SolverConfig",
    "VARIANT_NAMES",
    "Variant",
    "exhaustive_solve",
    "greedy_solve",
    "legacy_wire_instance",
    "list_solve",
    "random_solve",
    "run_variant",
    "sa_solve",
    "solved_instance",
]

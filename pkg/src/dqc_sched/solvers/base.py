from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ..feasibility import Metrics, score
from ..model import Instance, Schedule


@dataclass(frozen=True)
class AnnealingSchedule:
    """Exponential cooling from ``tau0`` down to ``tau_min``, ``iters_per_temp`` neighbors per level."""

    tau0: Fraction = Fraction(10)
    tau_min: Fraction = Fraction(1, 100)
    cooling: Fraction = Fraction(95, 100)
    iters_per_temp: int = 200

    def __post_init__(self):
        for name in ("tau0", "tau_min", "cooling"):
            object.__setattr__(self, name, Fraction(str(getattr(self, name))))
        if self.tau_min <= 0:
            raise ValueError("tau_min must be > 0")
        if not (0 < self.cooling < 1):
            raise ValueError("cooling must lie in (0, 1)")
        if self.iters_per_temp < 1:
            raise ValueError("iters_per_temp must be >= 1")

    @property
    def levels(self) -> int:
        n, tau = 0, self.tau0
        while tau > self.tau_min:
            n += 1
            tau *= self.cooling
        return n


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by every scheduler.

    ``allow_shot_split=False`` is the shot-agnostic mode. ``max_split_parts``
    caps how many QPUs one subcircuit may be spread over (None: all eligible).
    ``split_granularity`` sets the exhaustive search's split step (None: per
    subcircuit default) and ``max_nodes`` its node budget. ``oracle_moves``
    restricts the annealer to the exhaustive search's candidate allocations,
    which makes the two directly comparable.
    """

    allow_shot_split: bool = True
    sa: AnnealingSchedule = field(default_factory=AnnealingSchedule)
    seed: int = 0
    time_budget_ms: int | None = None
    alpha: Fraction | None = None
    max_split_parts: int | None = None
    split_granularity: int | None = None
    max_nodes: int = 2_000_000
    oracle_moves: bool = False
    polish_iters: int = 0

    def __post_init__(self):
        if self.split_granularity is not None and self.split_granularity < 1:
            raise ValueError("split_granularity must be >= 1")
        if self.max_split_parts is not None and self.max_split_parts < 1:
            raise ValueError("max_split_parts must be >= 1")
        if self.time_budget_ms is not None and self.time_budget_ms < 0:
            raise ValueError("time_budget_ms must be >= 0")
        if self.polish_iters < 0:
            raise ValueError("polish_iters must be >= 0")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "allow_shot_split": self.allow_shot_split,
            "sa": {
                "tau0": str(self.sa.tau0),
                "tau_min": str(self.sa.tau_min),
                "cooling": str(self.sa.cooling),
                "iters_per_temp": self.sa.iters_per_temp,
            },
            "seed": self.seed,
            "time_budget_ms": self.time_budget_ms,
            "alpha": None if self.alpha is None else str(self.alpha),
            "max_split_parts": self.max_split_parts,
            "split_granularity": self.split_granularity,
            "max_nodes": self.max_nodes,
            "oracle_moves": self.oracle_moves,
            "polish_iters": self.polish_iters,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        sa = AnnealingSchedule(**d.pop("sa", {}))
        if d.get("alpha") is not None:
            d["alpha"] = Fraction(str(d["alpha"]))
        return cls(sa=sa, **d)


@dataclass
class SolveResult:
    schedule: Schedule
    metrics: Metrics
    trace: list | None = None
    wall_time_ms: int = 0


class GuardExceeded(RuntimeError):
    """The exhaustive oracle refuses instances beyond its size guard."""


def finish(inst: Instance, schedule: Schedule, t0: float, trace=None) -> SolveResult:
    metrics = score(inst, schedule)
    wall = int(round((time.perf_counter() - t0) * 1000))
    return SolveResult(schedule, metrics, trace, wall)

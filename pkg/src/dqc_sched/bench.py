"""Workload generation and Monte Carlo experiments."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import random
from importlib import resources
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .cutter import ParameterDistributions, RawCircuit, circuit_seed, cut_circuit, derive_seed
from .model import QPU, CutKind, CutMethod, Instance, dump_instance, load_instance
from .solvers import SolverConfig, Variant, run_variant, solved_instance
from .timeline import assign_deadline, completion_times, reference_time

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to regenerate a batch of instances.

    ``deadline_mode`` is ``"uniform"`` (coefficient drawn from
    ``deadline_range``) or ``"fixed"`` (every circuit uses ``d_c``).
    ``cut_mix`` is ``"random"`` (gate or LOCC wire with probability 1/2),
    ``"gate"``, ``"locc"``, ``"legacy"`` or ``"gate-first:<n>"``.
    """

    qpu_count: int = 5
    qpu_qubit_range: tuple[int, int] = (10, 20)
    qpu_depth_range: tuple[int, int] = (10, 20)
    n0: int = 10_000
    gate_times: tuple[int, int] = (1, 10)
    overheads: dict = field(default_factory=lambda: {"gate": 9, "locc_wire": 9, "legacy_wire": 16})
    cut_sizes: dict = field(default_factory=lambda: {"gate": 12, "locc_wire": 6, "legacy_wire": 16})
    request_counts: tuple[int, ...] = (2, 3, 4, 5, 6)
    deadline_mode: str = "uniform"
    deadline_range: tuple[Fraction, Fraction] = (Fraction(3), Fraction(10))
    d_c: Fraction = Fraction(3)
    d_c_sweep: tuple[Fraction, ...] = (Fraction(13, 10), Fraction(2), Fraction(4), Fraction(7), Fraction(10))
    monte_carlo_runs: int = 50
    cut_mix: str = "random"
    master_seed: int = 0
    distributions: ParameterDistributions = field(default_factory=ParameterDistributions)

    def __post_init__(self):
        for name in ("qpu_qubit_range", "qpu_depth_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 1:
                raise ValueError(f"{name} must be a nonempty positive range")
        if self.monte_carlo_runs < 1:
            raise ValueError("monte_carlo_runs must be >= 1")
        if self.qpu_count < 1 or self.n0 < 1:
            raise ValueError("qpu_count and n0 must be >= 1")
        if self.deadline_mode not in ("uniform", "fixed"):
            raise ValueError(f"unknown deadline_mode {self.deadline_mode!r}")
        object.__setattr__(self, "deadline_range", tuple(Fraction(str(x)) for x in self.deadline_range))
        object.__setattr__(self, "d_c", Fraction(str(self.d_c)))
        object.__setattr__(self, "d_c_sweep", tuple(Fraction(str(x)) for x in self.d_c_sweep))
        object.__setattr__(self, "request_counts", tuple(self.request_counts))
        object.__setattr__(self, "overheads", {k: Fraction(str(v)) for k, v in self.overheads.items()})
        object.__setattr__(self, "cut_sizes", {k: int(v) for k, v in self.cut_sizes.items()})
        _cut_kinds(self.cut_mix, 1, random.Random(0))  # validates the rule
        for kind in CutKind:
            self.cut_method(kind)

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def cut_method(self, kind: CutKind) -> CutMethod:
        k = int(self.cut_sizes[kind.value])
        edges = k // 2 if kind is CutKind.LOCC_WIRE else 0
        return CutMethod(kind, k, Fraction(str(self.overheads[kind.value])), edges)

    def to_dict(self) -> dict:
        return {
            "qpu_count": self.qpu_count,
            "qpu_qubit_range": list(self.qpu_qubit_range),
            "qpu_depth_range": list(self.qpu_depth_range),
            "n0": self.n0,
            "gate_times": list(self.gate_times),
            "overheads": {k: str(v) for k, v in self.overheads.items()},
            "cut_sizes": dict(self.cut_sizes),
            "request_counts": list(self.request_counts),
            "deadline_mode": self.deadline_mode,
            "deadline_range": [str(x) for x in self.deadline_range],
            "d_c": str(self.d_c),
            "d_c_sweep": [str(x) for x in self.d_c_sweep],
            "monte_carlo_runs": self.monte_carlo_runs,
            "cut_mix": self.cut_mix,
            "master_seed": self.master_seed,
            "distributions": self.distributions.as_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d.pop("solver", None)
        d.pop("format_version", None)
        if "distributions" in d:
            d["distributions"] = ParameterDistributions.from_dict(d["distributions"])
        for key in ("qpu_qubit_range", "qpu_depth_range", "gate_times", "request_counts",
                    "deadline_range", "d_c_sweep"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _cut_kinds(rule: str, U: int, rng: random.Random) -> list[CutKind]:
    if rule == "random":
        return [CutKind.GATE if rng.random() < 0.5 else CutKind.LOCC_WIRE for _ in range(U)]
    if rule in ("gate", "locc", "legacy"):
        kind = {"gate": CutKind.GATE, "locc": CutKind.LOCC_WIRE, "legacy": CutKind.LEGACY_WIRE}[rule]
        return [kind] * U
    if rule.startswith("gate-first:"):
        n = int(rule.split(":", 1)[1])
        return [CutKind.GATE if i < n else CutKind.LOCC_WIRE for i in range(U)]
    raise ValueError(f"unknown cut_mix rule {rule!r}")


def instance_seed(cfg: ExperimentConfig, request_count: int, run_index: int) -> int:
    return derive_seed(cfg.master_seed, request_count, run_index)


def generate_instance(cfg: ExperimentConfig, run_index: int, request_count: int | None = None,
                      d_c: Fraction | None = None) -> Instance:
    """Sample one instance.

    The fleet and circuits depend only on ``(master_seed, request_count,
    run_index)``; ``d_c`` (or the config's deadline mode) only changes the
    deadlines, so a deadline sweep reuses the same circuits.
    """
    U = cfg.request_counts[0] if request_count is None else request_count
    seed = instance_seed(cfg, U, run_index)
    rng = random.Random(seed)
    qpus = tuple(
        QPU(m, rng.randint(*cfg.qpu_qubit_range), rng.randint(*cfg.qpu_depth_range))
        for m in range(cfg.qpu_count)
    )
    kinds = _cut_kinds(cfg.cut_mix, U, rng)
    lo, hi = cfg.deadline_range
    coeffs = []
    for _ in range(U):
        # millesimal resolution keeps the coefficient exactly rational
        coeffs.append(Fraction(rng.randint(math.ceil(lo * 1000), math.floor(hi * 1000)), 1000))
    if d_c is not None:
        coeffs = [Fraction(str(d_c))] * U
    elif cfg.deadline_mode == "fixed":
        coeffs = [cfg.d_c] * U
    circuits = []
    scratch = Instance(qpus, (), cfg.gate_times, seed)
    for i, kind in enumerate(kinds):
        raw = RawCircuit(i, kind, cfg.n0, circuit_seed(seed, i))
        c = cut_circuit(raw, qpus, cfg.distributions, cfg.cut_method(kind))
        t_ref = reference_time(c, scratch)
        circuits.append(replace(c, deadline=assign_deadline(c, t_ref, coeffs[i]), deadline_coeff=coeffs[i]))
    return Instance(qpus, tuple(circuits), cfg.gate_times, seed)


def instance_hash(inst: Instance) -> str:
    return hashlib.sha256(dump_instance(inst).encode()).hexdigest()[:16]


def tiny_config(**kw) -> ExperimentConfig:
    """Two requests small enough for the exhaustive search.

    Two QPUs, ``N_0 = 10`` and four-subcircuit cuts (the LOCC cut keeps one
    measure -> prepare edge per pair), so at most 8 subcircuits per instance.
    """
    base = dict(qpu_count=2, n0=10, request_counts=(2,),
                cut_sizes={"gate": 4, "locc_wire": 4, "legacy_wire": 16})
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# Monte Carlo sweeps
# ---------------------------------------------------------------------------

RAW_COLUMNS = ("variant", "request_count", "d_c", "run", "instance_seed", "instance_hash", "status",
               "served_count", "served_fraction", "bonus_count", "objective", "makespan", "wall_ms", "error")
AGG_COLUMNS = ("variant", "request_count", "d_c", "run_count", "failures", "mean_served_fraction",
               "stderr_served_fraction", "mean_makespan", "stderr_makespan")
UNIFORM = "uniform"


@dataclass(frozen=True)
class CellStats:
    run_count: int
    failures: int
    mean_served_fraction: Fraction | None
    stderr_served_fraction: float | None
    mean_makespan: Fraction | None
    stderr_makespan: float | None


@dataclass
class SweepResult:
    """Per-run rows plus per-cell aggregates keyed by ``(variant, request_count, d_c)``.

    ``d_c`` is ``"uniform"`` for cells whose coefficients were drawn per circuit.
    """

    raw: list[dict]
    cells: dict

    def raw_csv(self) -> str:
        return _csv(RAW_COLUMNS, self.raw)

    def agg_csv(self) -> str:
        return _csv(AGG_COLUMNS, [_agg_row(k, v) for k, v in self.cells.items()])

    def mean_served(self, variant: str, request_count: int, d_c=UNIFORM) -> Fraction:
        return self.cells[(variant, request_count, str(d_c))].mean_served_fraction

    def mean_makespan(self, variant: str, request_count: int, d_c=UNIFORM) -> Fraction:
        return self.cells[(variant, request_count, str(d_c))].mean_makespan

    def paired(self, column: str, variant: str, request_count: int, d_c=UNIFORM) -> list:
        """``column`` of the successful runs of one cell, ordered by run index."""
        rows = [r for r in self.raw if r["variant"] == variant and r["request_count"] == request_count
                and r["d_c"] == str(d_c) and r["status"] == "ok"]
        return [r[column] for r in sorted(rows, key=lambda r: r["run"])]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return repr(float(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _agg_row(key, st: CellStats) -> dict:
    variant, U, d_c = key
    return {"variant": variant, "request_count": U, "d_c": d_c, **st.__dict__}


def _mean_stderr(xs: list[Fraction]):
    """Exact mean, and the standard error of the mean (None for fewer than two samples)."""
    if not xs:
        return None, None
    n = len(xs)
    mean = sum(xs, Fraction(0)) / n
    if n < 2:
        return mean, None
    var = sum(((x - mean) ** 2 for x in xs), Fraction(0)) / (n - 1)
    return mean, math.sqrt(var / n)


def solver_seed(inst_seed: int) -> int:
    """Seed given to every variant on one instance, so runs stay paired."""
    return derive_seed(inst_seed, 2)


def _run_cell_instance(args):
    cfg, solver_cfg, variants, U, d_c, run = args
    inst = generate_instance(cfg, run, U, None if d_c == UNIFORM else Fraction(d_c))
    h = instance_hash(inst)
    scfg = solver_cfg.with_(seed=solver_seed(inst.seed))
    rows = []
    for v in variants:
        row = {"variant": v, "request_count": U, "d_c": str(d_c), "run": run,
               "instance_seed": inst.seed, "instance_hash": h}
        try:
            res = run_variant(inst, v, scfg, cfg.distributions, cfg.cut_method(CutKind.LEGACY_WIRE))
        except Exception as exc:  # recorded per cell, never aborts the sweep
            log.warning("variant %s failed on U=%s d_c=%s run=%s: %s", v, U, d_c, run, exc)
            row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        else:
            m = res.metrics
            row.update(status="ok", served_count=m.served_count, served_fraction=m.served_fraction,
                       bonus_count=m.bonus_count, objective=m.objective, makespan=m.makespan,
                       wall_ms=res.wall_time_ms, error="")
        rows.append(row)
    return rows


def sweep_grid(cfg: ExperimentConfig, d_cs=None) -> list[tuple[int, str]]:
    """``(request_count, d_c label)`` cells. ``d_cs`` defaults to the config's deadline mode."""
    if d_cs is None:
        d_cs = list(cfg.d_c_sweep) if cfg.deadline_mode == "fixed" else [UNIFORM]
    return [(U, str(d)) for U in cfg.request_counts for d in d_cs]


def run_sweep(cfg: ExperimentConfig, variants: Sequence[str], solver_cfg: SolverConfig | None = None,
              d_cs=None, workers: int = 1) -> SweepResult:
    """Run every variant on the same generated instances for each grid cell.

    Args:
        cfg: instance distributions, request counts and run count.
        variants: CLI variant names.
        solver_cfg: shared solver settings; each instance gets its own seed.
        d_cs: deadline coefficients to sweep (``"uniform"`` draws per circuit).
            Defaults to ``cfg.d_c_sweep`` in fixed mode, else uniform only.
        workers: process count; results do not depend on it.
    """
    variants = [Variant(v).value for v in variants]
    solver_cfg = solver_cfg or SolverConfig()
    jobs = [(cfg, solver_cfg, variants, U, d, run)
            for U, d in sweep_grid(cfg, d_cs) for run in range(cfg.monte_carlo_runs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_cell_instance, jobs))
    else:
        chunks = [_run_cell_instance(j) for j in jobs]
    raw = [r for chunk in chunks for r in chunk]
    return SweepResult(raw, aggregate(raw, variants, sweep_grid(cfg, d_cs)))


def aggregate(raw: list[dict], variants, grid) -> dict:
    cells = {}
    for v in variants:
        for U, d in grid:
            rows = [r for r in raw if r["variant"] == v and r["request_count"] == U and r["d_c"] == d]
            ok = [r for r in rows if r["status"] == "ok"]
            ms, ss = _mean_stderr([Fraction(r["served_fraction"]) for r in ok])
            mm, sm = _mean_stderr([Fraction(r["makespan"]) for r in ok])
            cells[(v, U, d)] = CellStats(len(rows), len(rows) - len(ok), ms, ss, mm, sm)
    return cells


# ---------------------------------------------------------------------------
# Oracle comparison on a two-request instance
# ---------------------------------------------------------------------------

TABLE2_METHODS = ("exhaustive", "proposed", "greedy", "list", "random", "shot-agnostic",
                  "dependency-agnostic", "dependency-and-shot-agnostic")
TABLE2_COLUMNS = ("method", "completion_1", "completion_2", "served", "objective", "makespan", "wall_ms")


def comparison_rows(inst: Instance, methods: Sequence[str] = TABLE2_METHODS,
                    solver_cfg: SolverConfig | None = None, cfg: ExperimentConfig | None = None) -> list[dict]:
    """One row per method: every circuit's completion time (None if dropped) and the served count."""
    cfg = cfg or ExperimentConfig()
    solver_cfg = solver_cfg or SolverConfig(seed=solver_seed(inst.seed))
    legacy = cfg.cut_method(CutKind.LEGACY_WIRE)
    rows = []
    for name in methods:
        res = run_variant(inst, name, solver_cfg, cfg.distributions, legacy)
        target = solved_instance(inst, name, cfg.distributions, legacy)
        ends = completion_times(target, res.schedule).per_circuit_end
        row = {"method": name, "served": res.metrics.served_count, "objective": res.metrics.objective,
               "makespan": res.metrics.makespan, "wall_ms": res.wall_time_ms}
        for i in range(inst.num_circuits):
            row[f"completion_{i + 1}"] = ends[i] if res.schedule.served[i] else None
        rows.append(row)
    return rows


def comparison_csv(rows: list[dict]) -> str:
    cols = ["method"] + sorted((k for k in rows[0] if k.startswith("completion_")),
                               key=lambda k: int(k.split("_")[1]))
    cols += ["served", "objective", "makespan", "wall_ms"]
    return _csv(cols, rows)


def table2_instance() -> Instance:
    """The archived two-request instance used for the oracle comparison table."""
    return load_instance(resources.files("dqc_sched.data").joinpath("table2_instance.json").read_text("utf-8"))


def table2_experiment(inst: Instance | None = None, solver_cfg: SolverConfig | None = None) -> list[dict]:
    """All eight methods on the archived tiny instance (or ``inst``)."""
    inst = inst or table2_instance()
    return comparison_rows(inst, TABLE2_METHODS, solver_cfg, tiny_config())

"""Command-line interface: ``python -m dqc_sched <command> ...``.

Exit codes: 0 success, 2 bad input (arguments or documents), 3 infeasible
schedule, 4 exhaustive-search guard exceeded, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from .bench import (
    ExperimentConfig,
    comparison_csv,
    comparison_rows,
    generate_instance,
    instance_hash,
    run_sweep,
    solver_seed,
    table2_instance,
    tiny_config,
)
from .feasibility import InfeasibleSchedule, score, validate
from .model import CutKind, InstanceError, dump_instance, dump_schedule, load_instance
from .render import render_csv, render_gantt
from .solvers import VARIANT_NAMES, AnnealingSchedule, GuardExceeded, SolverConfig, run_variant, solved_instance
from .timeline import DanglingReference

log = logging.getLogger("dqc_sched")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_GUARD = 0, 1, 2, 3, 4
LOG_ENV = "DQC_SCHED_LOG"


class UsageError(Exception):
    pass


def _setup_logging():
    level = os.environ.get(LOG_ENV, "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise UsageError(f"{LOG_ENV} must be one of {', '.join(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_config(path: str | None) -> tuple[ExperimentConfig, dict]:
    """Experiment config plus its optional ``solver`` section."""
    if path is None:
        return ExperimentConfig(), {}
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a JSON object")
    solver = doc.pop("solver", {}) or {}
    preset = doc.pop("preset", None)
    try:
        if preset == "tiny":
            base = tiny_config().to_dict()
            base.update(doc)
            doc = base
        elif preset is not None:
            raise ValueError(f"unknown preset {preset!r}")
        return ExperimentConfig.from_dict(doc), solver
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _solver_config(args, section: dict) -> SolverConfig:
    try:
        cfg = SolverConfig.from_dict(section) if section else SolverConfig()
        sa = cfg.sa
        kw = {}
        for flag, name in (("sa_tau0", "tau0"), ("sa_taumin", "tau_min"), ("sa_cooling", "cooling")):
            if getattr(args, flag, None) is not None:
                kw[name] = Fraction(getattr(args, flag))
        if getattr(args, "sa_iters", None) is not None:
            kw["iters_per_temp"] = args.sa_iters
        if kw:
            sa = AnnealingSchedule(**{"tau0": sa.tau0, "tau_min": sa.tau_min, "cooling": sa.cooling,
                                      "iters_per_temp": sa.iters_per_temp, **kw})
        cfg = cfg.with_(sa=sa)
        if getattr(args, "alpha", None) is not None:
            cfg = cfg.with_(alpha=Fraction(args.alpha))
        if getattr(args, "seed", None) is not None:
            cfg = cfg.with_(seed=args.seed)
        return cfg
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad solver settings: {exc}") from None


def _instance(args) -> "object":
    if args.instance is None:
        raise UsageError("--instance is required")
    return load_instance(_read(args.instance))


def _solved(args, inst, variant: str | None):
    cfg, _ = _load_config(args.config)
    if variant is None:
        return inst
    return solved_instance(inst, variant, cfg.distributions, cfg.cut_method(CutKind.LEGACY_WIRE))


def _schedule_doc(path: str) -> tuple[dict, "object"]:
    from .model import schedule_from_dict

    text = _read(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}", "$") from None
    return doc, schedule_from_dict(doc)


# -- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg, _ = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_(master_seed=args.seed)
    d_c = Fraction(args.d_c) if args.d_c is not None else None
    inst = generate_instance(cfg, args.run, args.requests, d_c)
    _write(dump_instance(inst), args.out)
    log.info("generated instance %s with %d circuits", instance_hash(inst), inst.num_circuits)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _instance(args)
    cfg, section = _load_config(args.config)
    scfg = _solver_config(args, section)
    if args.seed is None:
        scfg = scfg.with_(seed=solver_seed(inst.seed))
    res = run_variant(inst, args.variant, scfg, cfg.distributions, cfg.cut_method(CutKind.LEGACY_WIRE))
    extra = {
        "variant": args.variant,
        "instance_hash": instance_hash(inst),
        "solver": scfg.to_dict(),
        "metrics": res.metrics.to_dict(),
    }
    _write(dump_schedule(res.schedule, extra), args.out)
    m = res.metrics
    print(f"served {m.served_count}/{inst.num_circuits}  bonus {m.bonus_count}  objective {m.objective}  "
          f"makespan {m.makespan}  ({res.wall_time_ms} ms)", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.schedule is None:
        raise UsageError("--schedule is required")
    inst = _instance(args)
    doc, sched = _schedule_doc(args.schedule)
    target = _solved(args, inst, doc.get("variant"))
    violations = validate(target, sched)
    report = {"feasible": not violations, "violations": [v.to_dict() for v in violations]}
    if not violations:
        report["metrics"] = score(target, sched).to_dict()
    _write(json.dumps(report, indent=1) + "\n", args.out)
    for v in violations:
        print(f"{v.kind.value}: {v.detail}", file=sys.stderr)
    return EXIT_OK if not violations else EXIT_INFEASIBLE


def cmd_compare(args) -> int:
    cfg, section = _load_config(args.config)
    if args.config is None:
        cfg = tiny_config()
    scfg = _solver_config(args, section)
    inst = _instance(args) if args.instance else table2_instance()
    if args.seed is None:
        scfg = scfg.with_(seed=solver_seed(inst.seed))
    methods = args.variant or list(VARIANT_NAMES)
    order = ["exhaustive"] + [v for v in VARIANT_NAMES if v != "exhaustive"]
    methods = sorted(set(methods), key=order.index)
    rows = comparison_rows(inst, methods, scfg, cfg)
    text = comparison_csv(rows)
    width = max(len(r["method"]) for r in rows)
    comp_cols = [k for k in rows[0] if k.startswith("completion_")]
    header = f"{'method':<{width}}  " + "  ".join(f"{'T' + k.split('_')[1]:>9}" for k in comp_cols) + "  served"
    print(header)
    for r in rows:
        cells = "  ".join(f"{'-' if r[k] is None else r[k]:>9}" for k in comp_cols)
        print(f"{r['method']:<{width}}  {cells}  {r['served']:>6}")
    if args.out:
        _write(text, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, section = _load_config(args.config)
    scfg = _solver_config(args, section)
    variants = args.variant or [v for v in VARIANT_NAMES if v != "exhaustive"]
    d_cs = None
    if args.d_c:
        d_cs = [Fraction(x) for x in args.d_c]
    res = run_sweep(cfg, variants, scfg, d_cs, workers=args.workers)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "raw.csv").write_text(res.raw_csv(), encoding="utf-8")
    (out / "agg.csv").write_text(res.agg_csv(), encoding="utf-8")
    failures = sum(1 for r in res.raw if r["status"] != "ok")
    print(f"wrote {out / 'raw.csv'} ({len(res.raw)} rows, {failures} failures) and {out / 'agg.csv'}",
          file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    if args.schedule is None:
        raise UsageError("--schedule is required")
    inst = _instance(args)
    doc, sched = _schedule_doc(args.schedule)
    target = _solved(args, inst, doc.get("variant"))
    fmt = args.format or ("csv" if args.out and args.out.endswith(".csv") else "svg")
    if fmt == "csv":
        violations = validate(target, sched)
        if violations:
            raise InfeasibleSchedule(violations)
        text = render_csv(target, sched)
    else:
        text = render_gantt(target, sched, title=doc.get("variant"))
    _write(text, args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqc-sched", description="Deadline-aware scheduling of cut quantum circuits.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True, solver=False):
        sp.add_argument("--config", help="experiment config JSON (may hold a 'solver' section)")
        if instance:
            sp.add_argument("--instance", help="instance JSON")
        sp.add_argument("--seed", type=int, help="seed (solver seed, or master seed for generate)")
        sp.add_argument("--out", help="output path (default: standard output)")
        if solver:
            sp.add_argument("--alpha", help="bonus weight, e.g. 1/7 (default 1/(U+1))")
            sp.add_argument("--sa-tau0", help="initial temperature")
            sp.add_argument("--sa-taumin", help="final temperature")
            sp.add_argument("--sa-cooling", help="cooling factor in (0, 1)")
            sp.add_argument("--sa-iters", type=int, help="iterations per temperature level")

    g = sub.add_parser("generate", help="sample an instance")
    common(g, instance=False)
    g.add_argument("--run", type=int, default=0, help="Monte Carlo run index")
    g.add_argument("--requests", type=int, help="number of circuits (default: first configured count)")
    g.add_argument("--d-c", help="fixed deadline coefficient for every circuit")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="schedule an instance")
    common(s, solver=True)
    s.add_argument("--variant", default="proposed", choices=VARIANT_NAMES)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check a schedule against an instance")
    common(v)
    v.add_argument("--schedule", help="schedule JSON")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("compare", help="run several methods on one instance")
    common(c, solver=True)
    c.add_argument("--variant", action="append", choices=VARIANT_NAMES, help="repeatable; default all eight")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="Monte Carlo sweep writing raw.csv and agg.csv into --out")
    common(w, instance=False, solver=True)
    w.add_argument("--variant", action="append", choices=VARIANT_NAMES, help="repeatable; default all but exhaustive")
    w.add_argument("--d-c", action="append", help="fixed deadline coefficient cell (repeatable)")
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("render", help="draw a schedule as an SVG Gantt chart or a CSV table")
    common(r)
    r.add_argument("--schedule", help="schedule JSON")
    r.add_argument("--format", choices=("svg", "csv"))
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _setup_logging()
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, DanglingReference) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleSchedule as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except Exception as exc:  # last resort: report instead of a traceback
        log.debug("unhandled error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

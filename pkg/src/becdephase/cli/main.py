"""
Command-line entry point.

    becdephase run --preset fig2 --out out/fig2
    becdephase run --config my.cfg --override T=10nK --threads 4
    becdephase sweep --preset fig4 --axis D --values 2L,4L,8L --out out/sweep
    becdephase presets [NAME]

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from pathlib import Path

from ..kernels import THREADS_ENV, default_workers
from .config import (FIGURES, ConfigError, ExperimentConfig, build_config, figure_preset,
                     parse_overrides, parse_quantity, parse_text)
from .experiments import NumericalFailure, run_experiment
from .output import dumps, fmt, write_result

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SWEEP_AXES = ("D", "T", "a_AB", "a_B", "n0", "L", "alpha_depth", "lam")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="becdephase",
                                 description="Exact dephasing of double-well impurities in a Bose gas.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--preset", help=f"figure preset ({', '.join(FIGURES)})")
        p.add_argument("--config", type=Path, help="flat key = value configuration file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads over time points (default: ${THREADS_ENV} or 1)")
        p.add_argument("--distances", help="pair separations 2D for distance sweeps, e.g. 8L,16L,40L")
        p.add_argument("--log-x", action="store_true", help="logarithmic time axis in plots")
        p.add_argument("--no-plots", action="store_true", help="skip SVG rendering")

    run = sub.add_parser("run", help="run one experiment")
    common(run)
    sw = sub.add_parser("sweep", help="run an experiment for each value of one parameter")
    common(sw)
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma-separated values with units, e.g. 2L,4L")
    pr = sub.add_parser("presets", help="list figure presets or print one as a config file")
    pr.add_argument("name", nargs="?")
    return ap


def load_config(args) -> ExperimentConfig:
    base = figure_preset(args.preset) if args.preset else {}
    raw = {}
    if args.config is not None:
        try:
            raw = parse_text(args.config.read_text())
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
    if not base and not raw:
        raise ConfigError("--preset", "give --preset or --config")
    raw.update(parse_overrides(args.override))
    if args.distances:
        raw["separations"] = args.distances
    if args.log_x:
        raw["log_x"] = "true"
    return build_config(raw, base)


def _check_writable(out: Path):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError("--out", f"output directory is not writable: {exc}") from None


def _workers(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        return args.threads
    return default_workers()


def cmd_run(args) -> int:
    cfg = load_config(args)
    workers = _workers(args)
    _check_writable(args.out)
    start = time.perf_counter()
    result = run_experiment(cfg, workers)
    write_result(result, args.out, time.perf_counter() - start, plots=not args.no_plots)
    print(f"wrote {len(result.series)} curves to {args.out}")
    return 0


def summary_rows(summary: dict, prefix: str = ""):
    """Flatten nested scalars into ``(quantity, value)`` rows in key order."""
    for key in sorted(summary):
        value = summary[key]
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            yield from summary_rows(value, name)
        elif isinstance(value, bool) or value is None:
            yield name, "" if value is None else str(value).lower()
        elif isinstance(value, (int, float)):
            yield name, fmt(value)


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    workers = _workers(args)
    items = [v for v in args.values.split(",") if v.strip()]
    if not items:
        raise ConfigError("--values", "no sweep values given")
    values = [parse_quantity(v, args.axis, cfg.params.L) for v in items]
    points = [cfg.with_param(args.axis, v) for v in values]  # validate all before computing
    _check_writable(args.out)
    rows, index = [], []
    start = time.perf_counter()
    for j, (text, value, point) in enumerate(zip(items, values, points)):
        sub = f"point_{j:02d}"
        t0 = time.perf_counter()
        result = run_experiment(point, workers)
        write_result(result, args.out / sub, time.perf_counter() - t0, plots=not args.no_plots)
        index.append({"point": sub, "axis": args.axis, "text": text.strip(), "value": value,
                      "summary": result.summary})
        rows += [(j, value, q, v) for q, v in summary_rows(result.summary)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point", args.axis, "quantity", "value"])
    for j, value, q, v in rows:
        w.writerow([j, fmt(value), q, v])
    (args.out / "summary.csv").write_text(buf.getvalue())
    (args.out / "summary.json").write_text(dumps({"axis": args.axis, "base_config": cfg.to_text(),
                                                  "points": index}))
    print(f"swept {args.axis} over {len(values)} values in {time.perf_counter() - start:.1f} s; "
          f"summary in {args.out / 'summary.csv'}")
    return 0


def cmd_presets(args) -> int:
    if args.name is None:
        for name, d in FIGURES.items():
            print(f"{name:10s} {d['kind']:16s} {d.get('title', '')}")
        return 0
    cfg = build_config({}, figure_preset(args.name))
    sys.stdout.write(cfg.to_text())
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "presets": cmd_presets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"becdephase: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"becdephase: numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line entry points: run, validate, report, compare, gallery.

Exit codes: 0 success; 1 file, parse or validation errors; 2 when a run
records separation violations or invariant breaches.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigInvalid
from .report import (
    metrics_csv,
    per_tick_csv,
    per_tick_rows,
    read_trace,
    recompute_metrics,
    summary_table,
    write_trace,
)
from .scenario import Scenario, gallery_names, gallery_text, load_scenario, scenario_to_dict
from .sim_engine import run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSAFE = 2

log = logging.getLogger("flightq")


def _setup_logging(quiet: bool) -> None:
    level = os.environ.get("FLIGHTQ_LOG", "WARNING").upper()
    if quiet:
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _load(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    return scenario.with_overrides(horizon=getattr(args, "horizon", None), dt=getattr(args, "dt", None))


def cmd_run(args) -> int:
    scenario = _load(args)
    if args.dt is not None:
        problems = scenario.sim.problems()
        if problems:
            raise ConfigInvalid(problems)
    result = run(scenario, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(result.trace, out / "trace.jsonl")
    (out / "metrics.csv").write_text(metrics_csv(result.metrics), encoding="utf-8")
    m = result.metrics
    if not args.quiet:
        print(summary_table(m))
        print(f"\nwrote {out / 'trace.jsonl'} and {out / 'metrics.csv'}")
    if m.separation_violations or m.invariant_breaches:
        print(
            f"unsafe run: {m.separation_violations} separation violations, {m.invariant_breaches} invariant breaches",
            file=sys.stderr,
        )
        return EXIT_UNSAFE
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    if not args.quiet:
        print(f"ok: {scenario.name} ({len(scenario.openings)} opening(s), dispatch {scenario.dispatch.mode})")
    return EXIT_OK


def cmd_report(args) -> int:
    records = read_trace(args.trace)
    metrics = recompute_metrics(records)
    print(summary_table(metrics))
    out = Path(args.out) if args.out else Path(args.trace).with_name("ticks.csv")
    out.write_text(per_tick_csv(per_tick_rows(records)), encoding="utf-8")
    if not args.quiet:
        print(f"\nwrote {out}")
    return EXIT_OK


def _comparable(scenario: Scenario) -> dict:
    d = scenario_to_dict(scenario)
    d.pop("name")
    d.pop("dispatch")
    for o in d["openings"]:
        o.pop("policy")
    return d


def _one_seed(job) -> tuple[int, float | None]:
    scenario, seed = job
    m = run(scenario, seed=seed).metrics
    return m.failed_count, m.transit_mean


def cmd_compare(args) -> int:
    a = load_scenario(args.a).with_overrides(horizon=args.horizon)
    b = load_scenario(args.b).with_overrides(horizon=args.horizon)
    if _comparable(a) != _comparable(b):
        raise ConfigInvalid(["compare: scenarios must differ only in queue policy or dispatch configuration"])
    seeds = list(range(args.seeds))
    jobs = [(a, s) for s in seeds] + [(b, s) for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_one_seed, jobs))
    else:
        results = [_one_seed(j) for j in jobs]
    res_a, res_b = results[: len(seeds)], results[len(seeds):]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "failures_a", "failures_b", "transit_mean_a", "transit_mean_b"])
        for seed, (fa, ta), (fb, tb) in zip(seeds, res_a, res_b):
            writer.writerow([seed, fa, fb, "" if ta is None else repr(ta), "" if tb is None else repr(tb)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_gallery(args) -> int:
    if args.show:
        sys.stdout.write(gallery_text(args.show))
    else:
        for name in gallery_names():
            print(f"gallery:{name}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flightq", description="Flight-pattern queue simulator for drone openings.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario YAML path or gallery:<name>")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("run", help="simulate a scenario and write trace.jsonl and metrics.csv")
    common(p)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default="runs", help="output directory (default: runs)")
    p.add_argument("--horizon", type=float, default=None, help="override sim.horizon (s)")
    p.add_argument("--dt", type=float, default=None, help="override sim.dt (s)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a scenario and list every problem")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="summarize a trace and write a per-tick CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", default=None, help="per-tick CSV path (default: ticks.csv beside the trace)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="per-seed failures and transit times of two scenarios")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gallery", help="list built-in scenarios or print one")
    p.add_argument("--show", default=None, metavar="NAME")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_gallery)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.quiet)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"{type(exc).__name__}:", file=sys.stderr)
        for message in exc.errors:
            print(f"  {message}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

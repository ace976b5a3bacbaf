"""Trace and metrics files, and an independent trace reader.

The reader recomputes the run metrics from the trace alone (events plus
per-tick positions), without touching engine state, so the two can be
cross-checked.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from pathlib import Path
from typing import IO, Iterable

import numpy as np
from scipy.spatial.distance import pdist

from .sim_engine import TRACE_FORMAT, TRACE_VERSION, Metrics, OpeningMetrics

METRICS_HEADER = "# flightq-metrics v1"
METRICS_FIELDS = (
    "scope",
    "opening",
    "admitted",
    "failed",
    "throughput",
    "transit_mean",
    "transit_max",
    "min_observed_separation",
    "separation_violations",
    "invariant_breaches",
    "elapsed",
    "peak_occupancy",
    "peak_held",
)
TICK_FIELDS = ("t", "airborne", "approaching", "queued", "holding", "admitted_cum", "failed_cum", "min_sep")


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def trace_lines(trace: Iterable[dict]) -> Iterable[str]:
    for record in trace:
        yield json.dumps(record, separators=(",", ":"), allow_nan=False) + "\n"


def write_trace(trace: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(trace_lines(trace))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def metrics_csv(metrics: Metrics) -> str:
    buf = io.StringIO()
    buf.write(METRICS_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_FIELDS)
    writer.writerow(
        [
            "run",
            "",
            metrics.admitted_count,
            metrics.failed_count,
            _fmt(metrics.throughput),
            _fmt(metrics.transit_mean),
            _fmt(metrics.transit_max),
            _fmt(metrics.min_observed_separation),
            metrics.separation_violations,
            metrics.invariant_breaches,
            _fmt(metrics.elapsed),
            "",
            "",
        ]
    )
    for oid in sorted(metrics.per_opening):
        m = metrics.per_opening[oid]
        writer.writerow(
            [
                "opening",
                oid,
                m.admitted,
                m.failed,
                _fmt(m.throughput),
                _fmt(m.transit_mean),
                _fmt(m.transit_max),
                "",
                "",
                "",
                _fmt(metrics.elapsed),
                m.peak_occupancy,
                m.peak_held,
            ]
        )
    return buf.getvalue()


def write_metrics(metrics: Metrics, path: str | Path) -> None:
    Path(path).write_text(metrics_csv(metrics), encoding="utf-8")


def read_metrics(path: str | Path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ValueError(f"{path}: not a flightq metrics file")
    return list(csv.DictReader(lines[1:]))


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------


def read_trace(source: str | Path | IO[str]) -> list[dict]:
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    records = [json.loads(line) for line in lines if line.strip()]
    if not records or records[0].get("format") != TRACE_FORMAT:
        raise ValueError("not a flightq trace: missing header record")
    if records[0].get("version") != TRACE_VERSION:
        raise ValueError(f"unsupported trace version {records[0].get('version')!r}")
    return records


def _ticks(records: list[dict]) -> dict[float, list[dict]]:
    ticks: dict[float, list[dict]] = defaultdict(list)
    for r in records[1:]:
        if "drone_id" in r and "event" not in r:
            ticks[r["t"]].append(r)
    return ticks


def recompute_metrics(records: list[dict]) -> Metrics:
    """Metrics rebuilt from a trace's events and per-tick positions."""
    header = records[0]
    delta_min = header["delta_min"]
    spawn_time: dict[int, float] = {}
    per_opening = {oid: OpeningMetrics(opening_id=oid) for oid in header["openings"]}
    transits: dict[int, list[float]] = defaultdict(list)
    elapsed = 0.0
    breaches = 0
    for r in records[1:]:
        elapsed = max(elapsed, r["t"])
        event = r.get("event")
        if event == "spawn":
            spawn_time[r["drone_id"]] = r["spawn_time"]
        elif event == "admission":
            per_opening[r["opening"]].admitted += 1
            transits[r["opening"]].append(r["t"] - spawn_time[r["drone_id"]])
        elif event == "failure":
            per_opening[r["opening"]].failed += 1
        elif event == "invariant_breach":
            breaches += 1

    min_sep = math.inf
    violations = 0
    for rows in _ticks(records).values():
        if len(rows) < 2:
            continue
        d = pdist(np.array([[r["x"], r["y"], r["z"]] for r in rows]))
        min_sep = min(min_sep, float(d.min()))
        violations += int(np.count_nonzero(d < delta_min))

    m = Metrics(
        admitted_count=sum(o.admitted for o in per_opening.values()),
        failed_count=sum(o.failed for o in per_opening.values()),
        spawned_count=len(spawn_time),
        min_observed_separation=min_sep,
        separation_violations=violations,
        invariant_breaches=breaches,
        elapsed=elapsed,
        per_opening=per_opening,
    )
    m.throughput = m.admitted_count / elapsed if elapsed > 0 else 0.0
    every = [t for ts in transits.values() for t in ts]
    if every:
        m.transit_mean = sum(every) / len(every)
        m.transit_max = max(every)
    for oid, o in per_opening.items():
        ts = transits[oid]
        o.throughput = o.admitted / elapsed if elapsed > 0 else 0.0
        if ts:
            o.transit_mean = sum(ts) / len(ts)
            o.transit_max = max(ts)
    return m


def per_tick_rows(records: list[dict]) -> list[dict]:
    """One row per tick: airborne drones by state, cumulative outcomes, closest pair."""
    ticks = _ticks(records)
    admitted_at: dict[float, int] = defaultdict(int)
    failed_at: dict[float, int] = defaultdict(int)
    for r in records[1:]:
        if r.get("event") == "admission":
            admitted_at[r["t"]] += 1
        elif r.get("event") == "failure":
            failed_at[r["t"]] += 1
    times = sorted(set(ticks) | set(admitted_at) | set(failed_at))
    rows = []
    admitted = failed = 0
    for t in times:
        admitted += admitted_at.get(t, 0)
        failed += failed_at.get(t, 0)
        drones = ticks.get(t, [])
        states = defaultdict(int)
        for r in drones:
            states[r["state"]] += 1
        if len(drones) >= 2:
            sep = float(pdist(np.array([[r["x"], r["y"], r["z"]] for r in drones])).min())
        else:
            sep = math.inf
        rows.append(
            {
                "t": t,
                "airborne": len(drones),
                "approaching": states["approaching"],
                "queued": states["queued"] + states["swapping"],
                "holding": states["spawned"],
                "admitted_cum": admitted,
                "failed_cum": failed,
                "min_sep": sep,
            }
        )
    return rows


def per_tick_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TICK_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def summary_table(metrics: Metrics) -> str:
    def num(v, spec=".4f"):
        if v is None:
            return "-"
        return "inf" if isinstance(v, float) and math.isinf(v) else format(v, spec)

    lines = [
        f"admitted            {metrics.admitted_count}",
        f"failed              {metrics.failed_count}",
        f"spawned             {metrics.spawned_count}",
        f"elapsed (s)         {num(metrics.elapsed, '.2f')}",
        f"throughput (1/s)    {num(metrics.throughput)}",
        f"transit mean (s)    {num(metrics.transit_mean, '.3f')}",
        f"transit max (s)     {num(metrics.transit_max, '.3f')}",
        f"min separation (m)  {num(metrics.min_observed_separation)}",
        f"violations          {metrics.separation_violations}",
        f"invariant breaches  {metrics.invariant_breaches}",
        "",
        "opening  admitted  failed  throughput  transit_mean",
    ]
    for oid in sorted(metrics.per_opening):
        o = metrics.per_opening[oid]
        lines.append(f"{oid:>7}  {o.admitted:>8}  {o.failed:>6}  {num(o.throughput):>10}  {num(o.transit_mean, '.3f'):>12}")
    return "\n".join(lines)

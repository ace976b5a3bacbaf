import csv
import io
import math

import pytest
from conftest import make_scenario

from flightq.report import (
    METRICS_FIELDS,
    METRICS_HEADER,
    metrics_csv,
    per_tick_csv,
    per_tick_rows,
    read_trace,
    recompute_metrics,
    trace_lines,
)
from flightq.scenario import load_scenario
from flightq.sim_engine import run


def roundtrip(trace):
    return read_trace(io.StringIO("".join(trace_lines(trace))))


@pytest.mark.parametrize(
    "name, seed, horizon",
    [("single_circle", 0, 60.0), ("multi_opening_shared", 4, 60.0), ("stacked_3d", 1, 40.0)],
)
def test_recomputed_metrics_match_engine(name, seed, horizon):
    s = load_scenario(f"gallery:{name}").with_overrides(horizon=horizon)
    result = run(s, seed=seed)
    engine, again = result.metrics, recompute_metrics(roundtrip(result.trace))
    assert again.admitted_count == engine.admitted_count
    assert again.failed_count == engine.failed_count
    assert again.spawned_count == engine.spawned_count
    assert again.separation_violations == engine.separation_violations
    assert again.min_observed_separation == pytest.approx(engine.min_observed_separation, abs=1e-9)
    assert again.elapsed == pytest.approx(engine.elapsed)
    assert again.throughput == pytest.approx(engine.throughput)
    if engine.transit_mean is None:
        assert again.transit_mean is None
    else:
        assert again.transit_mean == pytest.approx(engine.transit_mean, abs=1e-9)
        assert again.transit_max == pytest.approx(engine.transit_max, abs=1e-9)
    for oid, o in engine.per_opening.items():
        assert again.per_opening[oid].admitted == o.admitted
        assert again.per_opening[oid].failed == o.failed


def test_metrics_csv_layout():
    m = run(make_scenario(workload={"kind": "stag_flocks", "h": 2, "S": 2.0})).metrics
    lines = metrics_csv(m).splitlines()
    assert lines[0] == METRICS_HEADER
    rows = list(csv.DictReader(lines[1:]))
    assert tuple(rows[0]) == METRICS_FIELDS
    assert [r["scope"] for r in rows] == ["run", "opening"]
    assert rows[1]["opening"] == "1" and rows[1]["admitted"] == "2"


def test_trace_header_and_rejection():
    s = make_scenario()
    records = roundtrip(run(s, seed=3).trace)
    header = records[0]
    assert header["format"] == "flightq-trace" and header["version"] == 1
    assert header["seed"] == 3 and header["dt"] == s.sim.dt and header["openings"] == [1]
    with pytest.raises(ValueError):
        read_trace(io.StringIO('{"t": 0}\n'))
    with pytest.raises(ValueError):
        read_trace(io.StringIO('{"format": "flightq-trace", "version": 9}\n'))


def test_per_tick_rows():
    s = make_scenario(workload={"kind": "stag_flocks", "h": 3, "S": 2.0})
    records = roundtrip(run(s).trace)
    rows = per_tick_rows(records)
    times = [r["t"] for r in rows]
    assert times == sorted(times)
    assert rows[-1]["admitted_cum"] == 3 and rows[-1]["failed_cum"] == 0
    for r in rows:
        assert r["airborne"] == r["approaching"] + r["queued"] + r["holding"]
        assert r["airborne"] >= 2 or math.isinf(r["min_sep"])
    text = per_tick_csv(rows).splitlines()
    assert text[0] == "t,airborne,approaching,queued,holding,admitted_cum,failed_cum,min_sep"
    assert len(text) == len(rows) + 1

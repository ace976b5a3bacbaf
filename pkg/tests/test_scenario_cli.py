import csv
import io
import json
from pathlib import Path

import pytest
import yaml
from conftest import make_scenario, scenario_dict

from flightq.cli import main
from flightq.errors import ScenarioParseError, ScenarioValidationError
from flightq.scenario import gallery_names, load_scenario, parse_scenario, render_scenario

REPO = Path(__file__).resolve().parents[1]
GALLERY = ["heterogeneous_stack", "multi_opening_shared", "nested_2d", "rose_desk", "single_circle", "stacked_3d"]


def dump(tmp_path, d, name="s.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(d))
    return path


def test_minimal_scenario_parses():
    s = make_scenario()
    assert s.version == 1 and len(s.openings) == 1
    assert s.openings[0].pattern.slot_count == 4
    assert s.openings[0].policy.kind.value == "fifo"
    assert s.dispatch.mode == "shared" and s.dispatch.lambda_total == 0.5
    assert s.workload[0].spawn_region is not None


def test_shared_rate_mismatch_rejected():
    openings = [
        {"id": 1, "position": [0, 0, 0], "lambda": 0.45, "pattern": {"variant": "circle", "radius": 1.0, "slots": 4}},
        {"id": 2, "position": [9, 0, 0], "lambda": 0.45, "pattern": {"variant": "circle", "radius": 1.0, "slots": 4}},
    ]
    with pytest.raises(ScenarioValidationError) as err:
        make_scenario(openings=openings, dispatch={"mode": "shared", "lambda_total": 1.0})
    assert any("RateMismatch" in e for e in err.value.errors)


def test_unknown_variant_names_field_and_line():
    d = scenario_dict()
    d["openings"][0]["pattern"]["variant"] = "hexagon"
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(yaml.safe_dump(d))
    (message,) = err.value.errors
    assert message.startswith("openings[0].pattern.variant:") and "(line " in message


def test_all_errors_collected():
    d = scenario_dict(sim={"dt": 0.2})
    d["openings"][0]["lambda"] = 5.0
    d["workload"] = {"kind": "burst", "n": 0}
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario(yaml.safe_dump(d))
    joined = "\n".join(err.value.errors)
    assert "too coarse" in joined
    assert "longest leg needs" in joined
    assert "n must be" in joined


def test_containment_violation_reported():
    d = scenario_dict()
    d["openings"][0]["pattern"] = {
        "variant": "nested2d",
        "layers": [
            {"variant": "ellipse", "semi_major": 2.0, "semi_minor": 1.0, "slots": 4},
            {"variant": "ellipse", "semi_major": 1.0, "semi_minor": 0.5, "slots": 4},
        ],
    }
    with pytest.raises(ScenarioValidationError, match="strictly contain"):
        parse_scenario(yaml.safe_dump(d))


def test_lrf_swap_window_must_fit():
    d = scenario_dict()
    d["openings"][0]["policy"] = {"kind": "lrf", "swap_duration": 2.0, "lateral_offset": 0.2}
    with pytest.raises(ScenarioValidationError, match="swap_duration"):
        parse_scenario(yaml.safe_dump(d))


def test_bad_yaml_is_parse_error():
    with pytest.raises(ScenarioParseError, match="line"):
        parse_scenario("version: 1\nsim: [unclosed\n")


def test_gallery_contents():
    assert gallery_names() == GALLERY


@pytest.mark.parametrize("name", GALLERY)
def test_round_trip(name):
    s = load_scenario(f"gallery:{name}")
    again = parse_scenario(render_scenario(s))
    assert again == s
    assert render_scenario(again) == render_scenario(s)


def test_cli_validate_exit_codes(tmp_path, capsys):
    good = dump(tmp_path, scenario_dict())
    assert main(["validate", "--scenario", str(good)]) == 0
    bad = scenario_dict()
    bad["openings"].append(dict(bad["openings"][0], id=2, position=[9, 0, 0]))
    bad["dispatch"] = {"mode": "shared", "lambda_total": 1.2}
    assert main(["validate", "--scenario", str(dump(tmp_path, bad, "bad.yaml"))]) == 1
    assert "RateMismatch" in capsys.readouterr().err
    assert main(["validate", "--scenario", str(tmp_path / "missing.yaml")]) == 1


def test_cli_run_writes_outputs(tmp_path):
    scenario = dump(tmp_path, scenario_dict(workload={"kind": "stag_flocks", "h": 3, "S": 2.0}))
    out = tmp_path / "runs"
    assert main(["run", "--scenario", str(scenario), "--seed", "7", "--out", str(out), "--quiet"]) == 0
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["format"] == "flightq-trace" and json.loads(lines[0])["seed"] == 7
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "# flightq-metrics v1"
    rows = list(csv.DictReader(metrics[1:]))
    assert rows[0]["scope"] == "run" and rows[0]["admitted"] == "3"


def test_cli_run_unsafe_exit_code(tmp_path):
    d = scenario_dict(workload={"kind": "burst", "n": 2, "spawn_region": {"box": {"lo": [5, 5, 5], "hi": [5, 5, 5]}}})
    assert main(["run", "--scenario", str(dump(tmp_path, d)), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_cli_run_dt_override_validated(tmp_path):
    scenario = dump(tmp_path, scenario_dict())
    assert main(["run", "--scenario", str(scenario), "--dt", "0.5", "--out", str(tmp_path), "--quiet"]) == 1


def test_cli_report(tmp_path, capsys):
    scenario = dump(tmp_path, scenario_dict(workload={"kind": "stag_flocks", "h": 2, "S": 2.0}))
    out = tmp_path / "runs"
    main(["run", "--scenario", str(scenario), "--out", str(out), "--quiet"])
    assert main(["report", "--trace", str(out / "trace.jsonl")]) == 0
    assert "admitted            2" in capsys.readouterr().out
    ticks = list(csv.DictReader(io.StringIO((out / "ticks.csv").read_text())))
    assert ticks[-1]["admitted_cum"] == "2"
    assert main(["report", "--trace", str(tmp_path / "nope.jsonl")]) == 1


def test_cli_compare(tmp_path, capsys):
    fifo = scenario_dict(workload={"kind": "burst", "n": 4, "battery": {"uniform": [5.0, 20.0]}})
    lrf = scenario_dict(workload=fifo["workload"])
    lrf["openings"][0]["policy"] = {"kind": "lrf", "swap_duration": 0.5, "lateral_offset": 0.15}
    a, b = dump(tmp_path, fifo, "a.yaml"), dump(tmp_path, lrf, "b.yaml")
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--a", str(a), "--b", str(b), "--seeds", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    assert set(rows[0]) == {"seed", "failures_a", "failures_b", "transit_mean_a", "transit_mean_b"}

    other = scenario_dict(workload={"kind": "burst", "n": 5})
    c = dump(tmp_path, other, "c.yaml")
    assert main(["compare", "--a", str(a), "--b", str(c), "--seeds", "1"]) == 1
    assert "differ only" in capsys.readouterr().err


def test_cli_gallery_listing(capsys):
    assert main(["gallery"]) == 0
    assert capsys.readouterr().out.split() == [f"gallery:{n}" for n in GALLERY]
    assert main(["gallery", "--show", "single_circle"]) == 0
    assert "single_circle" in capsys.readouterr().out


@pytest.mark.parametrize("name", ["stress_fifo", "stress_lrf", "worst_case"])
def test_repo_scenarios_validate(name):
    assert main(["validate", "--scenario", str(REPO / "scenarios" / f"{name}.yaml"), "--quiet"]) == 0

"""Scenario files: parsing, validation and rendering.

Scenarios are YAML documents.  Parsing collects every problem it finds and
raises once: structural problems (bad YAML, missing or mistyped fields,
unknown variants) as :class:`ScenarioParseError`, semantic ones (rate
mismatch, containment violation, coarse ``dt`` ...) as
:class:`ScenarioValidationError`.  Messages name the field path and, when
known, the line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from .dispatch import DispatchConfig, HybridGroup, Weights, validate_dispatch
from .errors import InvalidSpec, ScenarioParseError, ScenarioValidationError
from .geometry import (
    Circle,
    Ellipse,
    Nested2D,
    Orientation,
    PatternSpec,
    Rectangle,
    Stacked3D,
    ZigZag,
    as_vec3,
    build_pattern,
)
from .pattern_queue import Policy, PolicyKind
from .sim_engine import SimConfig
from .workload import (
    Burst,
    FixedBattery,
    PoissonArrivals,
    SpawnBox,
    SpawnShell,
    StagFlocks,
    UniformBattery,
    WorkloadSpec,
    validate_workload,
)

SCENARIO_VERSION = 1
GALLERY_PREFIX = "gallery:"


@dataclass(frozen=True)
class OpeningConfig:
    id: int
    position: tuple[float, float, float]
    lam: float
    pattern: PatternSpec
    policy: Policy = Policy()


@dataclass(frozen=True)
class Scenario:
    version: int
    name: str
    sim: SimConfig
    openings: tuple[OpeningConfig, ...]
    dispatch: DispatchConfig
    workload: tuple[WorkloadSpec, ...]

    def with_overrides(self, seed: int | None = None, horizon: float | None = None, dt: float | None = None):
        sim = self.sim
        if seed is not None:
            sim = replace(sim, seed=int(seed))
        if horizon is not None:
            sim = replace(sim, horizon=float(horizon))
        if dt is not None:
            sim = replace(sim, dt=float(dt))
        return replace(self, sim=sim)


# ---------------------------------------------------------------------------
# Reading helpers
# ---------------------------------------------------------------------------


def _line_map(text: str) -> dict[str, int]:
    lines: dict[str, int] = {}

    def walk(node, path):
        lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                walk(value, f"{path}.{key.value}" if path else str(key.value))
        elif isinstance(node, yaml.SequenceNode):
            for i, value in enumerate(node.value):
                walk(value, f"{path}[{i}]")

    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


class _Reader:
    def __init__(self, lines: dict[str, int]):
        self.lines = lines
        self.parse_errors: list[str] = []
        self.errors: list[str] = []

    def where(self, path: str) -> str:
        probe = path
        while probe:
            if probe in self.lines:
                return f" (line {self.lines[probe]})"
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        return ""

    def parse_error(self, path: str, message: str) -> None:
        self.parse_errors.append(f"{path}: {message}{self.where(path)}")

    def invalid(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}{self.where(path)}")

    def mapping(self, value: Any, path: str) -> dict | None:
        if not isinstance(value, dict):
            self.parse_error(path, f"expected a mapping, got {type(value).__name__}")
            return None
        return value

    def field(self, data: dict, key: str, path: str, kind: Callable, default: Any = ..., allowed: set | None = None):
        full = f"{path}.{key}" if path else key
        if key not in data or data[key] is None:
            if default is ...:
                self.parse_error(full, "missing required field")
                return None
            return default
        value = data[key]
        try:
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                value = float(value)
            elif kind is int:
                if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
                    raise TypeError
                value = int(value)
            elif kind is str:
                if not isinstance(value, str):
                    raise TypeError
            elif kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
            elif kind == "vec3":
                if not isinstance(value, (list, tuple)) or len(value) != 3:
                    raise TypeError
                value = as_vec3([float(v) for v in value])
            else:
                value = kind(value)
        except (TypeError, ValueError, InvalidSpec):
            expected = kind if isinstance(kind, str) else getattr(kind, "__name__", str(kind))
            self.parse_error(full, f"expected {expected}, got {value!r}")
            return None
        if allowed is not None and value not in allowed:
            self.parse_error(full, f"unknown value {value!r}; expected one of {sorted(allowed)}")
            return None
        return value

    def unknown_keys(self, data: dict, known: set[str], path: str) -> None:
        for key in data:
            if key not in known:
                self.parse_error(f"{path}.{key}" if path else str(key), "unknown field")


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------

_PRIMITIVE_FIELDS = {
    "circle": (Circle, ("radius",)),
    "ellipse": (Ellipse, ("semi_major", "semi_minor")),
    "rectangle": (Rectangle, ("width", "height")),
    "zigzag": (ZigZag, ("segment_length", "n_segments", "row_spacing")),
}
VARIANTS = set(_PRIMITIVE_FIELDS) | {"nested2d", "stacked3d"}


def _orientation(r: _Reader, value: Any, path: str) -> Orientation:
    try:
        if value is None:
            return Orientation()
        if isinstance(value, str):
            return Orientation.named(value)
        if isinstance(value, dict):
            if "quaternion" in value:
                return Orientation.normalized([float(v) for v in value["quaternion"]])
            if "axis" in value:
                return Orientation.from_axis_angle(
                    [float(v) for v in value["axis"]], math.radians(float(value.get("angle_deg", 0.0)))
                )
        r.parse_error(path, "expected horizontal|vertical|diagonal, {quaternion: [...]} or {axis, angle_deg}")
    except (InvalidSpec, TypeError, ValueError) as exc:
        r.parse_error(path, f"bad orientation: {exc}")
    return Orientation()


def _pattern(r: _Reader, value: Any, path: str, anchor, nested: bool = False) -> PatternSpec | None:
    data = r.mapping(value, path)
    if data is None:
        return None
    variant_name = r.field(data, "variant", path, str, allowed=VARIANTS)
    if variant_name is None:
        return None
    if variant_name in _PRIMITIVE_FIELDS:
        cls, names = _PRIMITIVE_FIELDS[variant_name]
        r.unknown_keys(data, {"variant", "slots", "orientation", *names}, path)
        args = [r.field(data, n, path, int if n == "n_segments" else float) for n in names]
        slots = r.field(data, "slots", path, int)
        if any(a is None for a in args) or slots is None:
            return None
        variant = cls(*args)
    else:
        if nested:
            r.parse_error(f"{path}.variant", "hierarchy layers must be primitive patterns")
            return None
        known = {"variant", "layers", "orientation", "slots"} | ({"layer_gap"} if variant_name == "stacked3d" else set())
        r.unknown_keys(data, known, path)
        raw_layers = data.get("layers")
        if not isinstance(raw_layers, list) or not raw_layers:
            r.parse_error(f"{path}.layers", "expected a non-empty list of patterns")
            return None
        layers = [_pattern(r, layer, f"{path}.layers[{i}]", anchor, nested=True) for i, layer in enumerate(raw_layers)]
        if any(layer is None for layer in layers):
            return None
        slots = r.field(data, "slots", path, int, default=None)
        if variant_name == "nested2d":
            variant = Nested2D(tuple(layers))
        else:
            gap = r.field(data, "layer_gap", path, float)
            if gap is None:
                return None
            variant = Stacked3D(tuple(layers), gap)
    orientation = _orientation(r, data.get("orientation"), f"{path}.orientation")
    return PatternSpec(variant, slots, anchor, orientation)


def _policy(r: _Reader, value: Any, path: str) -> Policy | None:
    if value is None:
        return Policy()
    data = r.mapping(value, path)
    if data is None:
        return None
    r.unknown_keys(data, {"kind", "swap_duration", "lateral_offset"}, path)
    kind = r.field(data, "kind", path, str, default="fifo", allowed={k.value for k in PolicyKind})
    duration = r.field(data, "swap_duration", path, float, default=0.0)
    offset = r.field(data, "lateral_offset", path, float, default=0.0)
    if kind is None or duration is None or offset is None:
        return None
    try:
        return Policy(PolicyKind(kind), duration, offset)
    except InvalidSpec as exc:
        r.invalid(path, str(exc))
        return None


def _opening(r: _Reader, value: Any, path: str) -> OpeningConfig | None:
    data = r.mapping(value, path)
    if data is None:
        return None
    r.unknown_keys(data, {"id", "position", "lambda", "pattern", "policy"}, path)
    oid = r.field(data, "id", path, int)
    position = r.field(data, "position", path, "vec3")
    lam = r.field(data, "lambda", path, float)
    pattern = _pattern(r, data.get("pattern"), f"{path}.pattern", position or (0.0, 0.0, 0.0))
    policy = _policy(r, data.get("policy"), f"{path}.policy")
    if None in (oid, position, lam, pattern, policy):
        return None
    return OpeningConfig(oid, position, lam, pattern, policy)


def _dispatch(r: _Reader, value: Any, openings: list[OpeningConfig]) -> DispatchConfig | None:
    path = "dispatch"
    if value is None:
        return DispatchConfig("shared", lambda_total=math.fsum(o.lam for o in openings) if openings else None)
    data = r.mapping(value, path)
    if data is None:
        return None
    r.unknown_keys(data, {"mode", "lambda_total", "weights", "count_inbound", "partition", "groups"}, path)
    mode = r.field(data, "mode", path, str, default="shared", allowed={"shared", "exclusive", "hybrid"})
    lambda_total = r.field(data, "lambda_total", path, float, default=None)
    count_inbound = r.field(data, "count_inbound", path, bool, default=False)
    weights = Weights()
    if data.get("weights") is not None:
        w = r.mapping(data["weights"], f"{path}.weights")
        if w is not None:
            r.unknown_keys(w, {"wait", "travel"}, f"{path}.weights")
            weights = Weights(
                r.field(w, "wait", f"{path}.weights", float, default=1.0) or 0.0,
                r.field(w, "travel", f"{path}.weights", float, default=1.0) or 0.0,
            )
    partition = {}
    if data.get("partition") is not None:
        p = r.mapping(data["partition"], f"{path}.partition")
        for cls, target in (p or {}).items():
            v = r.field(p, cls, f"{path}.partition", int)
            if v is not None:
                partition[str(cls)] = v
    groups = []
    for i, g in enumerate(data.get("groups") or []):
        gp = f"{path}.groups[{i}]"
        gd = r.mapping(g, gp)
        if gd is None:
            continue
        r.unknown_keys(gd, {"openings", "mode", "lambda_total"}, gp)
        ids = gd.get("openings")
        if not isinstance(ids, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in ids):
            r.parse_error(f"{gp}.openings", "expected a list of opening ids")
            continue
        gmode = r.field(gd, "mode", gp, str, default="shared", allowed={"shared", "exclusive"})
        glam = r.field(gd, "lambda_total", gp, float, default=None)
        groups.append(HybridGroup(tuple(ids), gmode or "shared", glam))
    if mode is None or count_inbound is None:
        return None
    return DispatchConfig(mode, lambda_total, partition, tuple(groups), weights, count_inbound)


def _spawn_region(r: _Reader, value: Any, path: str):
    data = r.mapping(value, path)
    if data is None:
        return None
    if len(data) != 1 or next(iter(data)) not in ("shell", "box"):
        r.parse_error(path, "expected exactly one of {shell: ...} or {box: ...}")
        return None
    kind, body = next(iter(data.items()))
    body = r.mapping(body, f"{path}.{kind}")
    if body is None:
        return None
    sub = f"{path}.{kind}"
    if kind == "box":
        r.unknown_keys(body, {"lo", "hi"}, sub)
        lo, hi = r.field(body, "lo", sub, "vec3"), r.field(body, "hi", sub, "vec3")
        return None if lo is None or hi is None else SpawnBox(lo, hi)
    r.unknown_keys(body, {"center", "r_min", "r_max", "min_elevation_deg"}, sub)
    center = r.field(body, "center", sub, "vec3")
    r_min = r.field(body, "r_min", sub, float)
    r_max = r.field(body, "r_max", sub, float)
    elev = r.field(body, "min_elevation_deg", sub, float, default=30.0)
    if None in (center, r_min, r_max, elev):
        return None
    return SpawnShell(center, r_min, r_max, elev)


def _battery(r: _Reader, value: Any, path: str, default: float):
    if value is None:
        return FixedBattery(default)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return FixedBattery(float(value))
    if isinstance(value, dict) and set(value) == {"uniform"}:
        bounds = value["uniform"]
        if isinstance(bounds, list) and len(bounds) == 2 and all(isinstance(b, (int, float)) for b in bounds):
            return UniformBattery(float(bounds[0]), float(bounds[1]))
    r.parse_error(path, "expected seconds or {uniform: [lo, hi]}")
    return None


_ARRIVAL_FIELDS = {
    "stag_flocks": (StagFlocks, (("h", int, ...), ("S", float, ...), ("drones_per_flock", int, 1))),
    "poisson": (PoissonArrivals, (("rate", float, ...), ("horizon", float, ...))),
    "burst": (Burst, (("n", int, ...), ("at", float, 0.0))),
}


def _workload_one(r: _Reader, value: Any, path: str, default_battery: float) -> WorkloadSpec | None:
    data = r.mapping(value, path)
    if data is None:
        return None
    kind_name = r.field(data, "kind", path, str, allowed=set(_ARRIVAL_FIELDS))
    if kind_name is None:
        return None
    cls, fields = _ARRIVAL_FIELDS[kind_name]
    r.unknown_keys(
        data,
        {"kind", "spawn_region", "battery", "drone_class", "low_battery_threshold", *(f[0] for f in fields)},
        path,
    )
    args = [r.field(data, name, path, kind, default=default) for name, kind, default in fields]
    region = _spawn_region(r, data["spawn_region"], f"{path}.spawn_region") if data.get("spawn_region") else None
    battery = _battery(r, data.get("battery"), f"{path}.battery", default_battery)
    drone_class = r.field(data, "drone_class", path, str, default="default")
    threshold = r.field(data, "low_battery_threshold", path, float, default=None)
    if any(a is None for a in args) or battery is None or drone_class is None:
        return None
    return WorkloadSpec(cls(*args), region, battery, drone_class, threshold)


def default_spawn_region(openings: list[OpeningConfig]) -> SpawnShell | None:
    """A shell above and outside every pattern's bounding sphere."""
    slots = []
    for o in openings:
        try:
            slots.append(build_pattern(o.pattern).slots)
        except InvalidSpec:
            return None
    if not slots:
        return None
    pts = np.vstack(slots)
    center = pts.mean(axis=0)
    radius = float(np.max(np.linalg.norm(pts - center, axis=1)))
    return SpawnShell(tuple(float(c) for c in center), radius + 1.0, radius + 2.0, 60.0)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _validate(r: _Reader, scenario: Scenario) -> None:
    for message in scenario.sim.problems():
        path, _, text = message.partition(": ")
        r.invalid(path, text)
    ids = [o.id for o in scenario.openings]
    if not scenario.openings:
        r.invalid("openings", "at least one opening is required")
    if len(set(ids)) != len(ids):
        r.invalid("openings", f"opening ids must be unique, got {ids}")
    for i, o in enumerate(scenario.openings):
        path = f"openings[{i}]"
        if not (math.isfinite(o.lam) and o.lam > 0):
            r.invalid(f"{path}.lambda", "admission rate must be > 0")
            continue
        try:
            pattern = build_pattern(o.pattern)
        except InvalidSpec as exc:
            r.invalid(f"{path}.pattern", str(exc))
            continue
        interval = 1.0 / o.lam
        dwell = o.policy.dwell
        if o.policy.reorders and not 0 < dwell < interval:
            r.invalid(f"{path}.policy.swap_duration", f"must lie in (0, {interval:g}) so legs still fit the interval")
            continue
        if pattern.slot_count > 1:
            need = float(pattern.leg_lengths.max()) / (interval - dwell)
            if need > scenario.sim.v_max_default + 1e-12:
                r.invalid(
                    f"{path}.pattern",
                    f"longest leg needs {need:.4g} m/s at this rate, above v_max {scenario.sim.v_max_default:g}",
                )
    rates = {o.id: o.lam for o in scenario.openings}
    for message in validate_dispatch(scenario.dispatch, rates):
        path, _, text = message.partition(": ")
        r.invalid(path, text)
    for i, w in enumerate(scenario.workload):
        for message in validate_workload(w):
            r.invalid(f"workload[{i}]" if len(scenario.workload) > 1 else "workload", message)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate scenario text."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ScenarioParseError([f"<document>: invalid YAML: {getattr(exc, 'problem', exc)}{where}"]) from exc
    r = _Reader(_line_map(text))
    data = r.mapping(data, "<document>")
    if data is None:
        raise ScenarioParseError(r.parse_errors)
    r.unknown_keys(data, {"version", "name", "sim", "openings", "dispatch", "workload"}, "")
    version = r.field(data, "version", "", int)
    if version is not None and version != SCENARIO_VERSION:
        r.parse_error("version", f"unsupported scenario version {version}; expected {SCENARIO_VERSION}")
    name = r.field(data, "name", "", str, default="scenario")

    sim = SimConfig()
    sim_data = r.mapping(data.get("sim", {}), "sim")
    if sim_data is not None:
        r.unknown_keys(sim_data, {f for f in SimConfig.__dataclass_fields__}, "sim")
        values = {}
        for key, default in (
            ("dt", sim.dt),
            ("delta_min", sim.delta_min),
            ("v_max_default", sim.v_max_default),
            ("initial_flight_time", sim.initial_flight_time),
            ("horizon", sim.horizon),
        ):
            values[key] = r.field(sim_data, key, "sim", float, default=default)
        values["seed"] = r.field(sim_data, "seed", "sim", int, default=0)
        values["approach_offset"] = r.field(sim_data, "approach_offset", "sim", float, default=None)
        if all(values[k] is not None for k in ("dt", "delta_min", "v_max_default", "initial_flight_time", "horizon", "seed")):
            sim = SimConfig(**values)

    openings = []
    raw_openings = data.get("openings")
    if not isinstance(raw_openings, list):
        r.parse_error("openings", "expected a list of openings")
    else:
        for i, o in enumerate(raw_openings):
            parsed = _opening(r, o, f"openings[{i}]")
            if parsed is not None:
                openings.append(parsed)

    dispatch = _dispatch(r, data.get("dispatch"), openings)

    raw_workload = data.get("workload")
    workloads = []
    if isinstance(raw_workload, dict):
        raw_workload = [raw_workload]
        paths = ["workload"]
    elif isinstance(raw_workload, list):
        paths = [f"workload[{i}]" for i in range(len(raw_workload))]
    else:
        r.parse_error("workload", "expected a workload mapping or a list of them")
        raw_workload, paths = [], []
    for item, path in zip(raw_workload, paths):
        w = _workload_one(r, item, path, sim.initial_flight_time)
        if w is not None:
            workloads.append(w)

    if r.parse_errors:
        raise ScenarioParseError(r.parse_errors + r.errors)
    region = default_spawn_region(openings)
    workloads = [w if w.spawn_region is not None else replace(w, spawn_region=region) for w in workloads]
    scenario = Scenario(version, name, sim, tuple(openings), dispatch, tuple(workloads))
    _validate(r, scenario)
    if r.errors:
        raise ScenarioValidationError(r.errors)
    return scenario


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _render_pattern(spec: PatternSpec, top: bool = True) -> dict:
    v = spec.variant
    if isinstance(v, (Nested2D, Stacked3D)):
        out: dict[str, Any] = {"variant": "nested2d" if isinstance(v, Nested2D) else "stacked3d"}
        out["layers"] = [_render_pattern(layer, top=False) for layer in v.layers]
        if isinstance(v, Stacked3D):
            out["layer_gap"] = v.layer_gap
        if spec.slot_count is not None:
            out["slots"] = spec.slot_count
    else:
        name = {Circle: "circle", Ellipse: "ellipse", Rectangle: "rectangle", ZigZag: "zigzag"}[type(v)]
        out = {"variant": name}
        out.update({k: getattr(v, k) for k in _PRIMITIVE_FIELDS[name][1]})
        out["slots"] = spec.slot_count
    if top:
        out["orientation"] = {"quaternion": list(spec.orientation.quaternion)}
    return out


def _render_workload(w: WorkloadSpec) -> dict:
    kind_name = {StagFlocks: "stag_flocks", PoissonArrivals: "poisson", Burst: "burst"}[type(w.kind)]
    out: dict[str, Any] = {"kind": kind_name}
    out.update({name: getattr(w.kind, name) for name, _, _ in _ARRIVAL_FIELDS[kind_name][1]})
    region = w.spawn_region
    if isinstance(region, SpawnBox):
        out["spawn_region"] = {"box": {"lo": list(region.lo), "hi": list(region.hi)}}
    elif isinstance(region, SpawnShell):
        out["spawn_region"] = {
            "shell": {
                "center": list(region.center),
                "r_min": region.r_min,
                "r_max": region.r_max,
                "min_elevation_deg": region.min_elevation_deg,
            }
        }
    if isinstance(w.battery, UniformBattery):
        out["battery"] = {"uniform": [w.battery.lo, w.battery.hi]}
    else:
        out["battery"] = w.battery.seconds
    out["drone_class"] = w.drone_class
    if w.low_battery_threshold is not None:
        out["low_battery_threshold"] = w.low_battery_threshold
    return out


def scenario_to_dict(scenario: Scenario) -> dict:
    sim = scenario.sim
    sim_out = {
        "dt": sim.dt,
        "delta_min": sim.delta_min,
        "v_max_default": sim.v_max_default,
        "initial_flight_time": sim.initial_flight_time,
        "horizon": sim.horizon,
        "seed": sim.seed,
    }
    if sim.approach_offset is not None:
        sim_out["approach_offset"] = sim.approach_offset
    d = scenario.dispatch
    dispatch: dict[str, Any] = {"mode": d.mode}
    if d.lambda_total is not None:
        dispatch["lambda_total"] = d.lambda_total
    dispatch["weights"] = {"wait": d.weights.wait, "travel": d.weights.travel}
    dispatch["count_inbound"] = d.count_inbound
    if d.partition:
        dispatch["partition"] = dict(d.partition)
    if d.groups:
        dispatch["groups"] = [
            {"openings": list(g.opening_ids), "mode": g.mode, **({"lambda_total": g.lambda_total} if g.lambda_total is not None else {})}
            for g in d.groups
        ]
    return {
        "version": scenario.version,
        "name": scenario.name,
        "sim": sim_out,
        "openings": [
            {
                "id": o.id,
                "position": list(o.position),
                "lambda": o.lam,
                "pattern": _render_pattern(o.pattern),
                "policy": {
                    "kind": o.policy.kind.value,
                    "swap_duration": o.policy.swap_duration,
                    "lateral_offset": o.policy.lateral_offset,
                },
            }
            for o in scenario.openings
        ],
        "dispatch": dispatch,
        "workload": [_render_workload(w) for w in scenario.workload],
    }


def render_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False, default_flow_style=None)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def gallery_names() -> list[str]:
    root = resources.files("flightq") / "scenarios"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def gallery_text(name: str) -> str:
    path = resources.files("flightq") / "scenarios" / f"{name}.yaml"
    if not path.is_file():
        raise FileNotFoundError(f"no gallery scenario named {name!r}; available: {', '.join(gallery_names())}")
    return path.read_text()


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario file, or a built-in one given as ``gallery:<name>``."""
    source = str(source)
    if source.startswith(GALLERY_PREFIX):
        return parse_scenario(gallery_text(source[len(GALLERY_PREFIX):]))
    return parse_scenario(Path(source).read_text())

"""Arrival processes: staggered flocks, Poisson arrivals and bursts."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidScale, InvalidSpec
from .geometry import Vec3, as_vec3

# Rose illumination workload: flocks in transit and staggering interval.
ROSE_FLOCKS = 218
ROSE_STAGGER_S = 1.36
FULL_CHARGE_FLIGHT_S = 300.0


@dataclass(frozen=True)
class StagFlocks:
    h: int
    S: float
    drones_per_flock: int = 1


@dataclass(frozen=True)
class PoissonArrivals:
    rate: float
    horizon: float


@dataclass(frozen=True)
class Burst:
    n: int
    at: float = 0.0


@dataclass(frozen=True)
class SpawnBox:
    lo: Vec3
    hi: Vec3


@dataclass(frozen=True)
class SpawnShell:
    """Spherical shell ``r_min <= r <= r_max`` around ``center``, above ``min_elevation_deg``."""

    center: Vec3
    r_min: float
    r_max: float
    min_elevation_deg: float = 30.0


@dataclass(frozen=True)
class FixedBattery:
    seconds: float


@dataclass(frozen=True)
class UniformBattery:
    lo: float
    hi: float


ArrivalKind = Union[StagFlocks, PoissonArrivals, Burst]
SpawnRegion = Union[SpawnBox, SpawnShell]
BatteryDistribution = Union[FixedBattery, UniformBattery]


@dataclass(frozen=True)
class WorkloadSpec:
    """One arrival process.

    Drones whose initial battery is below ``low_battery_threshold`` get the
    class ``"low-battery"``; everyone else gets ``drone_class``.
    """

    kind: ArrivalKind
    spawn_region: SpawnRegion | None = None
    battery: BatteryDistribution = FixedBattery(FULL_CHARGE_FLIGHT_S)
    drone_class: str = "default"
    low_battery_threshold: float | None = None


@dataclass(frozen=True)
class Arrival:
    spawn_time: float
    position: Vec3
    battery: float
    drone_class: str = "default"


def validate_workload(spec: WorkloadSpec) -> list[str]:
    errors = []
    kind = spec.kind
    if isinstance(kind, StagFlocks):
        if int(kind.h) != kind.h or kind.h < 1:
            errors.append("h must be an integer >= 1")
        if not (math.isfinite(kind.S) and kind.S > 0):
            errors.append("S must be > 0")
        if int(kind.drones_per_flock) != kind.drones_per_flock or kind.drones_per_flock < 1:
            errors.append("drones_per_flock must be an integer >= 1")
    elif isinstance(kind, PoissonArrivals):
        if not (math.isfinite(kind.rate) and kind.rate > 0):
            errors.append("rate must be > 0")
        if not (math.isfinite(kind.horizon) and kind.horizon > 0):
            errors.append("horizon must be > 0")
    elif isinstance(kind, Burst):
        if int(kind.n) != kind.n or kind.n < 1:
            errors.append("n must be an integer >= 1")
        if not (math.isfinite(kind.at) and kind.at >= 0):
            errors.append("at must be >= 0")
    else:
        errors.append(f"unknown arrival kind {type(kind).__name__}")
    region = spec.spawn_region
    if region is None:
        errors.append("spawn_region is required")
    elif isinstance(region, SpawnBox):
        try:
            lo, hi = as_vec3(region.lo), as_vec3(region.hi)
            if any(a > b for a, b in zip(lo, hi)):
                errors.append("spawn box lo must not exceed hi")
        except InvalidSpec as exc:
            errors.append(str(exc))
    elif isinstance(region, SpawnShell):
        if not (0 <= region.r_min <= region.r_max and math.isfinite(region.r_max)):
            errors.append("spawn shell needs 0 <= r_min <= r_max")
        if not -90 <= region.min_elevation_deg <= 90:
            errors.append("min_elevation_deg must lie in [-90, 90]")
    bat = spec.battery
    if isinstance(bat, FixedBattery):
        if not bat.seconds > 0:
            errors.append("battery must be > 0")
    elif isinstance(bat, UniformBattery):
        if not 0 < bat.lo <= bat.hi:
            errors.append("battery range needs 0 < lo <= hi")
    return errors


def _times(kind: ArrivalKind, rng: np.random.Generator) -> list[float]:
    if isinstance(kind, StagFlocks):
        return [k * kind.S for k in range(kind.h) for _ in range(kind.drones_per_flock)]
    if isinstance(kind, Burst):
        return [float(kind.at)] * kind.n
    times = []
    t = 0.0
    while True:
        t += float(rng.exponential(1.0 / kind.rate))
        if t >= kind.horizon:
            return times
        times.append(t)


def _positions(region: SpawnRegion, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(region, SpawnBox):
        lo, hi = np.asarray(region.lo, float), np.asarray(region.hi, float)
        return lo + rng.random((n, 3)) * (hi - lo)
    # Uniform in volume: z uniform on the cap gives uniform directions.
    z_lo = math.sin(math.radians(region.min_elevation_deg))
    z = z_lo + rng.random(n) * (1.0 - z_lo)
    phi = rng.random(n) * 2 * math.pi
    r3 = region.r_min**3 + rng.random(n) * (region.r_max**3 - region.r_min**3)
    r = np.cbrt(r3)
    rho = np.sqrt(np.clip(1 - z * z, 0.0, None))
    dirs = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return np.asarray(region.center, float) + dirs * r[:, None]


def _batteries(dist: BatteryDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(dist, FixedBattery):
        return np.full(n, float(dist.seconds))
    return dist.lo + rng.random(n) * (dist.hi - dist.lo)


def generate(spec: WorkloadSpec | Sequence[WorkloadSpec], seed: int) -> list[Arrival]:
    """Arrivals sorted by spawn time; a pure function of ``(spec, seed)``.

    Several specs are merged; their draws come from one generator in list
    order, and simultaneous arrivals keep list order.
    """
    specs = [spec] if isinstance(spec, WorkloadSpec) else list(spec)
    rng = np.random.default_rng(seed)
    merged = []
    for index, s in enumerate(specs):
        problems = validate_workload(s)
        if problems:
            raise InvalidSpec("; ".join(problems))
        times = _times(s.kind, rng)
        pos = _positions(s.spawn_region, len(times), rng)
        bat = _batteries(s.battery, len(times), rng)
        for i, t in enumerate(times):
            cls = s.drone_class
            if s.low_battery_threshold is not None and bat[i] < s.low_battery_threshold:
                cls = "low-battery"
            merged.append((t, index, i, Arrival(float(t), tuple(float(v) for v in pos[i]), float(bat[i]), cls)))
    merged.sort(key=lambda item: item[:3])
    return [item[3] for item in merged]


@dataclass(frozen=True)
class RoseDesk:
    workload: WorkloadSpec
    lam: float
    initial_flight_time: float
    slot_count: int


def rose_desk_scale(scale: float, almost_depleted: bool = False, battery_floor: float = 15.0) -> RoseDesk:
    """Scaled-down rose illumination workload plus matching charging-opening defaults.

    The opening rate equals one drone per staggering interval so the queue
    neither grows nor starves.  ``almost_depleted`` swaps the full 300 s
    battery for a uniform draw in ``[battery_floor, 60]`` seconds.
    """
    if not (isinstance(scale, (int, float)) and math.isfinite(scale) and 0 < scale <= 1):
        raise InvalidScale(f"scale must lie in (0, 1], got {scale!r}")
    h = round(ROSE_FLOCKS * scale)
    if h < 1:
        raise InvalidScale(f"scale {scale} leaves no flocks")
    battery = UniformBattery(battery_floor, 60.0) if almost_depleted else FixedBattery(FULL_CHARGE_FLIGHT_S)
    spec = WorkloadSpec(StagFlocks(h=h, S=ROSE_STAGGER_S), battery=battery)
    return RoseDesk(spec, 1.0 / ROSE_STAGGER_S, FULL_CHARGE_FLIGHT_S, 16)


CSV_FIELDS = ("spawn_time", "x", "y", "z", "battery", "drone_class")


def arrivals_to_csv(arrivals: Iterable[Arrival]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for a in arrivals:
        writer.writerow([repr(a.spawn_time), *map(repr, a.position), repr(a.battery), a.drone_class])
    return buf.getvalue()


def arrivals_from_csv(text: str) -> list[Arrival]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != CSV_FIELDS:
        raise InvalidSpec(f"arrival CSV header must be {','.join(CSV_FIELDS)}")
    return [
        Arrival(
            float(r["spawn_time"]),
            (float(r["x"]), float(r["y"]), float(r["z"])),
            float(r["battery"]),
            r["drone_class"],
        )
        for r in rows
    ]

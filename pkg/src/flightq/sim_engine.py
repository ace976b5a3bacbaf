"""Fixed-timestep kinematic simulation of drones staging through flight patterns.

Each tick of length ``dt`` runs, in order:

1. motion of every airborne drone (approach, queue legs, swap arcs);
2. battery drain and failure detection;
3. admission ticks of every opening whose next admission time has come,
   followed by gossip swaps and retries of held drones;
4. spawning of new arrivals and their assignment to an opening;
5. separation audit, trace records and invariant checks.

Approach rule: a drone flies at ``v_max`` to a waypoint offset from its slot
along the pattern normal (on the side it spawned on, clear of the whole
pattern), waits there until its slot is clear, then descends onto the slot.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from .dispatch import Opening, Orchestrator
from .geometry import build_pattern
from .pattern_queue import HOLD, Drone, DroneState, PatternQueue, swap_paths
from .workload import Arrival, generate

if TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)

TRACE_FORMAT = "flightq-trace"
TRACE_VERSION = 1
TIME_EPS = 1e-9
# Descent speed as a multiple of the slowest queue leg speed; below sqrt(3)
# keeps a descending drone clear of a slot's departing occupant.
DESCENT_FACTOR = 1.5


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    delta_min: float = 0.1
    v_max_default: float = 1.0
    initial_flight_time: float = 300.0
    horizon: float = 600.0
    seed: int = 0
    approach_offset: float | None = None

    @property
    def offset(self) -> float:
        return 2 * self.delta_min if self.approach_offset is None else self.approach_offset

    def problems(self) -> list[str]:
        errors = []
        if not (math.isfinite(self.dt) and self.dt > 0):
            errors.append("sim.dt: must be > 0")
        if not (math.isfinite(self.delta_min) and self.delta_min > 0):
            errors.append("sim.delta_min: must be > 0")
        if not (math.isfinite(self.v_max_default) and self.v_max_default > 0):
            errors.append("sim.v_max_default: must be > 0")
        if not (math.isfinite(self.initial_flight_time) and self.initial_flight_time > 0):
            errors.append("sim.initial_flight_time: must be > 0")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            errors.append("sim.horizon: must be > 0")
        if not errors and self.v_max_default * self.dt >= self.delta_min / 2:
            errors.append(
                f"sim.dt: too coarse, v_max*dt = {self.v_max_default * self.dt:g} must be < delta_min/2 = "
                f"{self.delta_min / 2:g}"
            )
        if self.approach_offset is not None and not self.approach_offset > 0:
            errors.append("sim.approach_offset: must be > 0")
        if int(self.seed) != self.seed:
            errors.append("sim.seed: must be an integer")
        return errors


@dataclass
class OpeningMetrics:
    opening_id: int
    admitted: int = 0
    failed: int = 0
    throughput: float = 0.0
    transit_mean: float | None = None
    transit_max: float | None = None
    peak_occupancy: int = 0
    peak_held: int = 0


@dataclass
class Metrics:
    admitted_count: int = 0
    failed_count: int = 0
    spawned_count: int = 0
    throughput: float = 0.0
    transit_mean: float | None = None
    transit_max: float | None = None
    min_observed_separation: float = math.inf
    separation_violations: int = 0
    invariant_breaches: int = 0
    elapsed: float = 0.0
    per_opening: dict[int, OpeningMetrics] = field(default_factory=dict)


@dataclass(eq=False)
class _QueueGeometry:
    normal: np.ndarray
    clearance_above: np.ndarray
    clearance_below: np.ndarray
    descent_speed: float


def check_separation(positions: Sequence[Sequence[float]] | np.ndarray, delta_min: float):
    """Exact minimum pairwise distance and the index pairs closer than ``delta_min``."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        return math.inf, []
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu, ju = np.triu_indices(len(pts), k=1)
    pair_dist = dist[iu, ju]
    bad = np.nonzero(pair_dist < delta_min)[0]
    return float(pair_dist.min()), [(int(iu[b]), int(ju[b]), float(pair_dist[b])) for b in bad]


def _opening_geometry(queue: PatternQueue) -> _QueueGeometry:
    pattern = queue.pattern
    n = pattern.normal
    heights = pattern.slots @ n
    above = np.clip(heights.max() - heights, 0.0, None)
    below = np.clip(heights - heights.min(), 0.0, None)
    if pattern.slot_count > 1:
        flow = DESCENT_FACTOR * queue.lam * float(pattern.leg_lengths.min())
    else:
        flow = math.inf
    return _QueueGeometry(n, above, below, flow)


@dataclass(eq=False)
class SimState:
    config: SimConfig
    openings: list[Opening]
    orchestrator: Orchestrator
    pending: deque
    clock: float = 0.0
    step_index: int = 0
    drones: dict[int, Drone] = field(default_factory=dict)
    active: dict[int, Drone] = field(default_factory=dict)
    failed_total: int = 0
    trace: list[dict] = field(default_factory=list)
    admissions: list[tuple[float, int, int]] = field(default_factory=list)
    leg_log: list[dict] = field(default_factory=list)
    transit: dict[int, list[float]] = field(default_factory=dict)
    min_separation: float = math.inf
    violations: int = 0
    breaches: list[str] = field(default_factory=list)
    peak_held: dict[int, int] = field(default_factory=dict)
    next_id: int = 0
    geometry: dict[int, _QueueGeometry] = field(default_factory=dict)
    rates: tuple = ()
    _events: list[dict] = field(default_factory=list)

    @property
    def by_id(self) -> dict[int, Opening]:
        return self.orchestrator.by_id

    def airborne(self) -> list[Drone]:
        return list(self.active.values())

    def done(self) -> bool:
        return not self.pending and not self.active

    def state_counts(self) -> dict[str, int]:
        counts = {s.value: 0 for s in DroneState}
        for d in self.active.values():
            counts[d.state.value] += 1
        counts[DroneState.ADMITTED.value] += len(self.admissions)
        counts[DroneState.FAILED.value] += self.failed_total
        return counts


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def build_state(scenario: "Scenario", seed: int | None = None, arrivals: Sequence[Arrival] | None = None) -> SimState:
    """Initial world for ``scenario``; ``arrivals`` overrides the generated workload."""
    config = scenario.sim
    seed = config.seed if seed is None else seed
    openings = []
    for oc in scenario.openings:
        pattern = build_pattern(oc.pattern)
        queue = PatternQueue(pattern, oc.lam, oc.policy)
        openings.append(Opening(oc.id, tuple(oc.position), oc.lam, queue))
    orchestrator = Orchestrator(openings, scenario.dispatch)
    if arrivals is None:
        arrivals = generate(scenario.workload, seed)
    state = SimState(config=config, openings=orchestrator.openings, orchestrator=orchestrator, pending=deque(arrivals))
    for o in state.openings:
        state.geometry[o.id] = _opening_geometry(o.queue)
        state.transit[o.id] = []
        state.peak_held[o.id] = 0
    state.rates = _rate_fingerprint(state)
    state.trace.append(
        {
            "format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "scenario": scenario.name,
            "seed": int(seed),
            "dt": config.dt,
            "delta_min": config.delta_min,
            "openings": [o.id for o in state.openings],
        }
    )
    _spawn_due(state)
    _audit(state)
    return state


def _rate_fingerprint(state: SimState) -> tuple:
    return tuple((o.id, o.lam, o.queue.lam) for o in state.openings)


# ---------------------------------------------------------------------------
# Motion
# ---------------------------------------------------------------------------


def _move(drone: Drone, target: np.ndarray, speed: float, dt: float) -> bool:
    """Straight-line move toward ``target``; clamps on arrival and reports it."""
    delta = target - drone.position
    dist = math.sqrt(float(delta @ delta))
    step = speed * dt
    if dist <= step + 1e-12:
        drone.position = target.copy()
        return True
    drone.position = drone.position + delta * (step / dist)
    return False


def _slot_clear(state: SimState, drone: Drone, point: np.ndarray) -> bool:
    radius = state.config.delta_min / 2
    for other in state.active.values():
        if other is drone:
            continue
        if np.linalg.norm(other.position - point) < radius:
            return False
    return True


def _waypoint(state: SimState, drone: Drone, queue: PatternQueue) -> np.ndarray:
    geo = state.geometry[drone.opening_id]
    slot_pos = queue.pattern.slots[drone.slot]
    if drone.approach_side >= 0:
        lift = state.config.offset + geo.clearance_above[drone.slot]
    else:
        lift = -(state.config.offset + geo.clearance_below[drone.slot])
    return slot_pos + lift * geo.normal


def _move_approaching(state: SimState, drone: Drone, queue: PatternQueue, t_old: float, t_new: float) -> None:
    dt = t_new - t_old
    slot_pos = queue.pattern.slots[drone.slot]
    if not drone.descending:
        waypoint = _waypoint(state, drone, queue)
        if not _move(drone, waypoint, drone.v_max, dt):
            return
        if not _slot_clear(state, drone, slot_pos):
            return
        drone.descending = True
        return
    speed = min(drone.v_max, state.geometry[drone.opening_id].descent_speed)
    if _move(drone, slot_pos, speed, dt):
        drone.state = DroneState.QUEUED
        drone.descending = False
        drone.dwelling = True
        _event(state, "landed", drone_id=drone.id, opening=drone.opening_id, slot=drone.slot)


def _start_leg(drone: Drone, slot_pos: np.ndarray, now: float, dt: float) -> None:
    dist = float(np.linalg.norm(slot_pos - drone.position))
    window = max(drone.leg_deadline - now, dt)
    drone.dwelling = False
    drone.leg_from = drone.position.copy()
    drone.leg_started_at = now
    drone.leg_speed = min(drone.v_max, dist / window)


def _move_queued(state: SimState, drone: Drone, queue: PatternQueue, t_old: float, t_new: float) -> None:
    slot_pos = queue.pattern.slots[drone.slot]
    dt = t_new - t_old
    if drone.dwelling:
        if np.array_equal(drone.position, slot_pos) or t_old < drone.leg_start - TIME_EPS:
            return
        _start_leg(drone, slot_pos, t_old, dt)
    if _move(drone, slot_pos, drone.leg_speed, dt):
        drone.dwelling = True
        length = float(np.linalg.norm(slot_pos - drone.leg_from))
        record = {
            "drone_id": drone.id,
            "opening": drone.opening_id,
            "slot": drone.slot,
            "length": length,
            "duration": round(t_new - drone.leg_started_at, 9),
            "start": drone.leg_started_at,
        }
        state.leg_log.append(record)


def _move_swapping(state: SimState, drone: Drone, queue: PatternQueue, t_new: float) -> None:
    duration = queue.policy.swap_duration
    tau = 1.0 if duration <= 0 else (t_new - drone.swap_start) / duration
    if tau >= 1.0 - TIME_EPS:
        drone.position = drone.swap_path(1.0)
        queue.finish_swap(drone)
        drone.dwelling = True
        drone.swap_path = None
    else:
        drone.position = drone.swap_path(tau)


# ---------------------------------------------------------------------------
# Events, spawning, admissions
# ---------------------------------------------------------------------------


def _event(state: SimState, name: str, **fields: Any) -> None:
    record = {"t": state.clock, "event": name}
    record.update(fields)
    state._events.append(record)


def _begin_approach(state: SimState, drone: Drone, queue: PatternQueue, opening: Opening) -> None:
    drone.state = DroneState.APPROACHING
    drone.dwelling = False
    drone.descending = False
    side = float((drone.position - np.asarray(opening.position)) @ state.geometry[opening.id].normal)
    drone.approach_side = 1.0 if side >= 0 else -1.0
    _event(state, "enqueue", drone_id=drone.id, opening=opening.id, slot=drone.slot)


def _spawn_due(state: SimState) -> None:
    config = state.config
    while state.pending and state.pending[0].spawn_time <= state.clock + TIME_EPS:
        arrival = state.pending.popleft()
        drone = Drone(
            id=state.next_id,
            position=np.asarray(arrival.position, dtype=float),
            v_max=config.v_max_default,
            remaining_flight_time=arrival.battery,
            drone_class=arrival.drone_class,
            spawn_time=arrival.spawn_time,
        )
        state.next_id += 1
        state.drones[drone.id] = drone
        state.active[drone.id] = drone
        _event(
            state,
            "spawn",
            drone_id=drone.id,
            spawn_time=arrival.spawn_time,
            x=float(drone.position[0]),
            y=float(drone.position[1]),
            z=float(drone.position[2]),
            battery=arrival.battery,
            drone_class=arrival.drone_class,
        )
        decision = state.orchestrator.assign(drone)
        _event(
            state,
            "assignment",
            drone_id=drone.id,
            opening=decision.opening_id,
            estimated_wait=decision.estimated_wait,
            travel_time=decision.travel_time,
            feasible=decision.feasible,
        )
        opening = state.by_id[decision.opening_id]
        result = opening.queue.enqueue(drone)
        if result is HOLD:
            _event(state, "hold", drone_id=drone.id, opening=opening.id)
        else:
            _begin_approach(state, drone, opening.queue, opening)
        state.peak_held[opening.id] = max(state.peak_held[opening.id], len(opening.queue.held))


def _fire_opening(state: SimState, opening: Opening) -> None:
    queue = opening.queue
    now = state.clock
    while now >= queue.next_admission_time - TIME_EPS:
        admitted = queue.admission_tick(now)
        if admitted is not None:
            drone = state.drones[admitted]
            transit = now - drone.spawn_time
            state.transit[opening.id].append(transit)
            state.admissions.append((now, opening.id, admitted))
            del state.active[admitted]
            state.orchestrator.release(opening.id, admitted, "admitted")
            _event(state, "admission", drone_id=admitted, opening=opening.id, transit=transit)
        if queue.policy.reorders:
            for k, k_next in queue.gossip_round():
                a = state.drones[queue.occupancy[k]]
                b = state.drones[queue.occupancy[k_next]]
                queue.execute_swap(k, k_next, now)
                paths = swap_paths(a.position, b.position, queue.policy.lateral_offset, queue.pattern.normal)
                a.swap_path = lambda tau, f=paths: f(tau)[0]
                b.swap_path = lambda tau, f=paths: f(tau)[1]
                for d in (a, b):
                    d.swap_start = now
                    d.dwelling = False
                _event(state, "swap", opening=opening.id, slots=[k, k_next], drones=[a.id, b.id])
        for drone, _ in queue.retry_held():
            _begin_approach(state, drone, queue, opening)
        leg_start = now + queue.policy.dwell
        for drone in queue.members.values():
            if drone.state in (DroneState.QUEUED, DroneState.SWAPPING):
                drone.leg_start = leg_start
                drone.leg_deadline = queue.next_admission_time
                if drone.state is DroneState.QUEUED and not drone.dwelling:
                    _start_leg(drone, queue.pattern.slots[drone.slot], now, state.config.dt)


def _fail(state: SimState, drone: Drone) -> None:
    opening = state.by_id[drone.opening_id]
    opening.queue.remove(drone.id)
    drone.state = DroneState.FAILED
    drone.dwelling = False
    del state.active[drone.id]
    state.failed_total += 1
    state.orchestrator.release(opening.id, drone.id, "failed")
    _event(state, "failure", drone_id=drone.id, opening=opening.id, airborne=state.clock - drone.spawn_time)


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------


def _audit(state: SimState) -> None:
    airborne = state.airborne()
    if len(airborne) >= 2:
        positions = np.array([d.position for d in airborne])
        min_dist, pairs = check_separation(positions, state.config.delta_min)
        state.min_separation = min(state.min_separation, min_dist)
        for i, j, dist in pairs:
            state.violations += 1
            _event(state, "violation", drones=[airborne[i].id, airborne[j].id], distance=dist)
    counts = state.state_counts()
    held = sum(len(o.queue.held) for o in state.openings)
    slotted = sum(len(o.queue.occupancy) for o in state.openings)
    problems = []
    if sum(counts.values()) != len(state.drones) or any(d.state.terminal for d in state.active.values()):
        problems.append("conservation: state counts do not add up to spawned drones")
    if held != counts["spawned"]:
        problems.append(f"conservation: {held} held drones but {counts['spawned']} in spawned state")
    if slotted != counts["approaching"] + counts["queued"] + counts["swapping"]:
        problems.append("conservation: slot reservations disagree with in-pattern drones")
    if _rate_fingerprint(state) != state.rates:
        problems.append("rates: an opening admission rate changed during the run")
    for o in state.openings:
        if len(o.queue.occupancy) > o.queue.capacity:
            problems.append(f"capacity: opening {o.id} exceeds its slot count")
    for message in problems:
        state.breaches.append(f"t={state.clock}: {message}")
        _event(state, "invariant_breach", message=message)


def _record_tick(state: SimState) -> None:
    state.trace.extend(state._events)
    state._events = []
    for d in state.active.values():
        state.trace.append(
            {
                "t": state.clock,
                "drone_id": d.id,
                "x": float(d.position[0]),
                "y": float(d.position[1]),
                "z": float(d.position[2]),
                "state": d.state.value,
                "slot": d.slot,
                "opening": d.opening_id,
                "remaining_s": d.remaining_flight_time,
            }
        )


def step(state: SimState, config: SimConfig | None = None) -> SimState:
    """Advance the world by one tick of ``config.dt`` seconds."""
    config = config or state.config
    if state.step_index == 0 and state._events:
        _record_tick(state)
    t_old = state.clock
    state.step_index += 1
    state.clock = round(state.step_index * config.dt, 9)
    t_new = state.clock
    dt = t_new - t_old

    for drone in list(state.active.values()):
        if drone.state is DroneState.SPAWNED:
            continue
        queue = state.by_id[drone.opening_id].queue
        if drone.state is DroneState.APPROACHING:
            _move_approaching(state, drone, queue, t_old, t_new)
        elif drone.state is DroneState.SWAPPING:
            _move_swapping(state, drone, queue, t_new)
        elif drone.state is DroneState.QUEUED:
            _move_queued(state, drone, queue, t_old, t_new)

    for drone in list(state.active.values()):
        drone.remaining_flight_time -= dt
        if drone.remaining_flight_time <= TIME_EPS:
            drone.remaining_flight_time = 0.0
            _fail(state, drone)

    for opening in state.openings:
        _fire_opening(state, opening)
    _spawn_due(state)
    for opening in state.openings:
        state.peak_held[opening.id] = max(state.peak_held[opening.id], len(opening.queue.held))
    _audit(state)
    _record_tick(state)
    return state


def finalize(state: SimState) -> Metrics:
    elapsed = state.clock
    metrics = Metrics(
        admitted_count=len(state.admissions),
        failed_count=sum(1 for d in state.drones.values() if d.state is DroneState.FAILED),
        spawned_count=len(state.drones),
        min_observed_separation=state.min_separation,
        separation_violations=state.violations,
        invariant_breaches=len(state.breaches),
        elapsed=elapsed,
    )
    metrics.throughput = metrics.admitted_count / elapsed if elapsed > 0 else 0.0
    every = [t for ts in state.transit.values() for t in ts]
    if every:
        metrics.transit_mean = sum(every) / len(every)
        metrics.transit_max = max(every)
    for o in state.openings:
        ts = state.transit[o.id]
        metrics.per_opening[o.id] = OpeningMetrics(
            opening_id=o.id,
            admitted=state.orchestrator.admitted[o.id],
            failed=state.orchestrator.failed[o.id],
            throughput=state.orchestrator.admitted[o.id] / elapsed if elapsed > 0 else 0.0,
            transit_mean=sum(ts) / len(ts) if ts else None,
            transit_max=max(ts) if ts else None,
            peak_occupancy=o.queue.peak_occupancy,
            peak_held=state.peak_held[o.id],
        )
    return metrics


@dataclass(eq=False)
class RunResult:
    trace: list[dict]
    metrics: Metrics
    state: SimState

    def __iter__(self):
        return iter((self.trace, self.metrics))


def run(scenario: "Scenario", seed: int | None = None, arrivals: Sequence[Arrival] | None = None) -> RunResult:
    """Simulate until the horizon or until every drone is admitted or failed."""
    state = build_state(scenario, seed=seed, arrivals=arrivals)
    horizon = scenario.sim.horizon
    while state.clock < horizon - TIME_EPS and not state.done():
        step(state, scenario.sim)
    if state._events:
        _record_tick(state)
    metrics = finalize(state)
    log.info(
        "run %s: admitted=%d failed=%d min_sep=%.4f violations=%d",
        scenario.name,
        metrics.admitted_count,
        metrics.failed_count,
        metrics.min_observed_separation,
        metrics.separation_violations,
    )
    return RunResult(state.trace, metrics, state)

"""Orchestrator routing of drones across openings.

Three relationships between openings and the infrastructure are supported:

* exclusive - each drone class is mapped to one opening;
* shared - every opening serves the whole infrastructure, the opening rates
  add up to the infrastructure rate, and drones pick the cheapest opening;
* hybrid - openings are grouped; each group is exclusive or shared.

The shared-mode cost of opening ``i`` is
``w_wait * Q_i / lam_i + w_travel * distance_i / v_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyOpeningSet, InvalidSpec, RateMismatch, UnknownAssignment, UnmappedDroneClass
from .geometry import Vec3
from .pattern_queue import Drone, PatternQueue

RATE_RTOL = 1e-12
DEFAULT_CLASS = "*"


@dataclass(eq=False)
class Opening:
    id: int
    position: Vec3
    lam: float
    queue: PatternQueue

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise InvalidSpec(f"opening {self.id}: admission rate must be > 0")


@dataclass(frozen=True)
class Weights:
    wait: float = 1.0
    travel: float = 1.0


@dataclass(frozen=True)
class HybridGroup:
    opening_ids: tuple[int, ...]
    mode: str = "shared"
    lambda_total: float | None = None


@dataclass(frozen=True)
class DispatchConfig:
    """Routing configuration.

    ``partition`` maps a drone class to an opening id (exclusive) or a group
    index (hybrid).  The ``"*"`` key, when present, catches unmapped classes.
    """

    mode: str = "shared"
    lambda_total: float | None = None
    partition: Mapping[str, int] = field(default_factory=dict)
    groups: tuple[HybridGroup, ...] = ()
    weights: Weights = Weights()
    count_inbound: bool = False


@dataclass(frozen=True)
class AssignmentDecision:
    drone_id: int
    opening_id: int
    estimated_wait: float
    travel_time: float
    feasible: bool


def validate_rates(openings: Sequence[Opening] | Sequence[float], lambda_total: float) -> None:
    """Raise :class:`RateMismatch` unless the opening rates sum to ``lambda_total``."""
    rates = [o if isinstance(o, (int, float)) else o.lam for o in openings]
    total = math.fsum(rates)
    residual = total - lambda_total
    if abs(residual) > RATE_RTOL * max(abs(lambda_total), abs(total)):
        raise RateMismatch(residual)


def queue_length(opening: Opening, count_inbound: bool = False) -> int:
    q = opening.queue.queued_count()
    if count_inbound:
        q += opening.queue.inbound_count()
    return q


def _estimate(drone: Drone, opening: Opening, config: DispatchConfig) -> tuple[float, float, float]:
    wait = queue_length(opening, config.count_inbound) / opening.lam
    travel = float(np.linalg.norm(np.asarray(opening.position) - drone.position)) / drone.v_max
    cost = config.weights.wait * wait + config.weights.travel * travel
    return cost, wait, travel


def _decision(drone: Drone, opening: Opening, config: DispatchConfig) -> AssignmentDecision:
    _, wait, travel = _estimate(drone, opening, config)
    return AssignmentDecision(drone.id, opening.id, wait, travel, wait + travel < drone.remaining_flight_time)


def _cheapest(drone: Drone, candidates: Sequence[Opening], config: DispatchConfig) -> AssignmentDecision:
    best = None
    for opening in sorted(candidates, key=lambda o: o.id):
        cost, wait, travel = _estimate(drone, opening, config)
        feasible = wait + travel < drone.remaining_flight_time
        key = (not feasible, cost)
        if best is None or key < best[0]:
            best = (key, AssignmentDecision(drone.id, opening.id, wait, travel, feasible))
    return best[1]


def _lookup(partition: Mapping[str, int], drone: Drone) -> int:
    if drone.drone_class in partition:
        return partition[drone.drone_class]
    if DEFAULT_CLASS in partition:
        return partition[DEFAULT_CLASS]
    raise UnmappedDroneClass(f"drone class {drone.drone_class!r} has no partition entry")


def assign_opening(drone: Drone, openings: Sequence[Opening], config: DispatchConfig) -> AssignmentDecision:
    """Choose the opening for a newly spawned drone.

    Shared mode takes the minimum-cost feasible opening (lowest id on ties).
    When no opening is feasible the minimum-cost one is still returned with
    ``feasible=False``: the drone is routed anyway and may fail.
    """
    if not openings:
        raise EmptyOpeningSet("no openings to assign to")
    by_id = {o.id: o for o in openings}
    if config.mode == "shared":
        return _cheapest(drone, openings, config)
    if config.mode == "exclusive":
        target = _lookup(config.partition, drone)
        if target not in by_id:
            raise UnmappedDroneClass(f"class {drone.drone_class!r} maps to unknown opening {target}")
        return _decision(drone, by_id[target], config)
    if config.mode == "hybrid":
        index = _lookup(config.partition, drone)
        if not 0 <= index < len(config.groups):
            raise UnmappedDroneClass(f"class {drone.drone_class!r} maps to unknown group {index}")
        members = [by_id[i] for i in config.groups[index].opening_ids]
        return _cheapest(drone, members, config)
    raise InvalidSpec(f"unknown dispatch mode {config.mode!r}")


def validate_dispatch(config: DispatchConfig, rates: Mapping[int, float]) -> list[str]:
    """Every configuration problem, as messages; an empty list means valid."""
    errors = []
    ids = set(rates)
    if config.weights.wait < 0 or config.weights.travel < 0:
        errors.append("dispatch.weights: weights must be >= 0")
    if config.mode == "shared":
        if config.lambda_total is None:
            errors.append("dispatch.lambda_total: required in shared mode")
        else:
            try:
                validate_rates(list(rates.values()), config.lambda_total)
            except RateMismatch as exc:
                errors.append(f"dispatch.lambda_total: {exc}")
    elif config.mode == "exclusive":
        if not config.partition:
            errors.append("dispatch.partition: required in exclusive mode")
        for cls, target in config.partition.items():
            if target not in ids:
                errors.append(f"dispatch.partition.{cls}: unknown opening id {target}")
    elif config.mode == "hybrid":
        seen: list[int] = []
        for i, group in enumerate(config.groups):
            path = f"dispatch.groups[{i}]"
            seen.extend(group.opening_ids)
            unknown = [g for g in group.opening_ids if g not in ids]
            if unknown:
                errors.append(f"{path}.openings: unknown opening ids {unknown}")
            if group.mode == "exclusive" and len(group.opening_ids) != 1:
                errors.append(f"{path}: an exclusive group has exactly one opening")
            elif group.mode == "shared":
                if group.lambda_total is None:
                    errors.append(f"{path}.lambda_total: required for a shared group")
                elif not unknown:
                    try:
                        validate_rates([rates[g] for g in group.opening_ids], group.lambda_total)
                    except RateMismatch as exc:
                        errors.append(f"{path}.lambda_total: {exc}")
            elif group.mode not in ("exclusive", "shared"):
                errors.append(f"{path}.mode: unknown group mode {group.mode!r}")
        if sorted(seen) != sorted(ids) or len(seen) != len(set(seen)):
            errors.append("dispatch.groups: groups must partition the set of openings")
        for cls, index in config.partition.items():
            if not 0 <= index < len(config.groups):
                errors.append(f"dispatch.partition.{cls}: unknown group index {index}")
        if not config.partition:
            errors.append("dispatch.partition: required in hybrid mode")
    else:
        errors.append(f"dispatch.mode: unknown mode {config.mode!r}")
    return errors


@dataclass
class _Record:
    opening_id: int
    decision: AssignmentDecision
    outcome: str | None = None


class Orchestrator:
    """Serial assignment authority: one decision per spawned drone, closed on release."""

    def __init__(self, openings: Sequence[Opening], config: DispatchConfig):
        if not openings:
            raise EmptyOpeningSet("no openings to assign to")
        self.openings = sorted(openings, key=lambda o: o.id)
        self.by_id = {o.id: o for o in self.openings}
        self.config = config
        self.records: dict[int, _Record] = {}
        self.admitted: dict[int, int] = {o.id: 0 for o in self.openings}
        self.failed: dict[int, int] = {o.id: 0 for o in self.openings}

    def assign(self, drone: Drone) -> AssignmentDecision:
        if drone.id in self.records:
            raise ValueError(f"drone {drone.id} already has an assignment")
        decision = assign_opening(drone, self.openings, self.config)
        self.records[drone.id] = _Record(decision.opening_id, decision)
        drone.opening_id = decision.opening_id
        return decision

    def release(self, opening_id: int, drone_id: int, outcome: str = "admitted") -> None:
        record = self.records.get(drone_id)
        if record is None or record.opening_id != opening_id or record.outcome is not None:
            raise UnknownAssignment(f"no open assignment of drone {drone_id} to opening {opening_id}")
        record.outcome = outcome
        if outcome == "admitted":
            self.admitted[opening_id] += 1
        else:
            self.failed[opening_id] += 1

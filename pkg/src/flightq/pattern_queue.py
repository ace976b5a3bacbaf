"""Slot occupancy for one pattern bound to one opening.

The queue admits its head once every ``1/lam`` seconds and shifts every
remaining drone one slot toward the head.  Under the
least-remaining-flight-time policy, adjacent drones exchange metadata
between ticks and swap slots when the drone ahead has more flight time left.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DuplicateDrone, InvalidSpec, PolicyMismatch, SlotEmpty, SwapWindowTooShort
from .geometry import Pattern

TIME_EPS = 1e-9


class DroneState(str, enum.Enum):
    SPAWNED = "spawned"
    APPROACHING = "approaching"
    QUEUED = "queued"
    SWAPPING = "swapping"
    ADMITTED = "admitted"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (DroneState.ADMITTED, DroneState.FAILED)


@dataclass(eq=False)
class Drone:
    """A drone and its lifecycle state.

    ``dwelling`` is True while the drone hovers at rest on a slot position.
    The remaining attributes after it are motion bookkeeping owned by the
    simulation engine.
    """

    id: int
    position: np.ndarray
    v_max: float
    remaining_flight_time: float
    state: DroneState = DroneState.SPAWNED
    slot: int | None = None
    partner_id: int | None = None
    opening_id: int | None = None
    drone_class: str = "default"
    spawn_time: float = 0.0
    initial_flight_time: float = 0.0
    dwelling: bool = False

    spawn_position: np.ndarray | None = None
    approach_side: float = 1.0
    descending: bool = False
    leg_start: float = 0.0
    leg_deadline: float = 0.0
    leg_speed: float = 0.0
    leg_from: np.ndarray | None = None
    leg_started_at: float = 0.0
    swap_path: Callable[[float], np.ndarray] | None = None
    swap_start: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.spawn_position is None:
            self.spawn_position = self.position.copy()
        if not self.initial_flight_time:
            self.initial_flight_time = self.remaining_flight_time


class PolicyKind(str, enum.Enum):
    FIFO = "fifo"
    LRF = "lrf"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind = PolicyKind.FIFO
    swap_duration: float = 0.0
    lateral_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if not (math.isfinite(self.swap_duration) and self.swap_duration >= 0):
            raise InvalidSpec(f"swap_duration must be >= 0, got {self.swap_duration!r}")
        if self.kind is PolicyKind.LRF and not self.lateral_offset > 0:
            raise InvalidSpec("lateral_offset must be > 0 for the least-remaining-flight-time policy")

    @property
    def reorders(self) -> bool:
        return self.kind is PolicyKind.LRF

    @property
    def dwell(self) -> float:
        """Time reserved at the start of every interval for swaps."""
        return self.swap_duration if self.reorders else 0.0


@dataclass(frozen=True)
class SlotAssignment:
    slot: int
    position: np.ndarray


class _Hold:
    def __repr__(self):
        return "HOLD"

    def __bool__(self):
        return False


HOLD = _Hold()


class PatternQueue:
    """Single-owner state machine; the simulation loop is the only mutator."""

    def __init__(self, pattern: Pattern, lam: float, policy: Policy | None = None, start_time: float = 0.0):
        if not (math.isfinite(lam) and lam > 0):
            raise InvalidSpec(f"admission rate must be > 0, got {lam!r}")
        self.pattern = pattern
        self.lam = float(lam)
        self.policy = policy or Policy()
        self.occupancy: dict[int, int] = {}
        self.members: dict[int, Drone] = {}
        self.held: deque[Drone] = deque()
        self.start_time = start_time
        self.ticks = 0
        self.next_admission_time = start_time + 1.0 / self.lam
        self.last_tick_time = start_time
        self.peak_occupancy = 0
        self.gossip_rounds = 0
        self._shifts = 0

    @property
    def capacity(self) -> int:
        return self.pattern.slot_count

    def __len__(self) -> int:
        return len(self.occupancy)

    def tail(self) -> int | None:
        return max(self.occupancy) if self.occupancy else None

    def queued_count(self) -> int:
        return sum(1 for d in self.members.values() if d.state in (DroneState.QUEUED, DroneState.SWAPPING))

    def inbound_count(self) -> int:
        approaching = sum(1 for d in self.members.values() if d.state is DroneState.APPROACHING)
        return approaching + len(self.held)

    def order(self) -> list[int]:
        """Drone ids from head to tail."""
        return [self.occupancy[k] for k in sorted(self.occupancy)]

    # -- operations ---------------------------------------------------------

    def _try_assign(self, drone: Drone) -> SlotAssignment | _Hold:
        tail = self.tail()
        slot = 0 if tail is None else tail + 1
        if slot >= self.capacity:
            return HOLD
        self.occupancy[slot] = drone.id
        self.members[drone.id] = drone
        drone.slot = slot
        drone.state = DroneState.APPROACHING
        self.peak_occupancy = max(self.peak_occupancy, len(self.occupancy))
        self._check()
        return SlotAssignment(slot, self.pattern.slots[slot].copy())

    def enqueue(self, drone: Drone) -> SlotAssignment | _Hold:
        """Assign the slot behind the current tail, or slot 0 if the queue is empty.

        Returns ``HOLD`` when no slot is free behind the tail, or when earlier
        drones are already holding; the drone then waits for
        :meth:`retry_held`.
        """
        if drone.id in self.members or any(h.id == drone.id for h in self.held):
            raise DuplicateDrone(f"drone {drone.id} already in this queue")
        if drone.state not in (DroneState.SPAWNED, DroneState.APPROACHING):
            raise ValueError(f"drone {drone.id} cannot enqueue from state {drone.state.value}")
        if self.held:
            self.held.append(drone)
            drone.state = DroneState.SPAWNED
            return HOLD
        result = self._try_assign(drone)
        if result is HOLD:
            drone.state = DroneState.SPAWNED
            self.held.append(drone)
        return result

    def retry_held(self) -> list[tuple[Drone, SlotAssignment]]:
        assigned = []
        while self.held:
            result = self._try_assign(self.held[0])
            if result is HOLD:
                break
            assigned.append((self.held.popleft(), result))
        return assigned

    def admission_tick(self, now: float) -> int | None:
        """Fire the opening: admit the head if it is present, then shift everyone forward."""
        if now < self.next_admission_time - TIME_EPS:
            raise ValueError(f"admission tick at {now} precedes next admission time {self.next_admission_time}")
        admitted = None
        head_id = self.occupancy.get(0)
        if head_id is not None:
            head = self.members[head_id]
            at_head = np.linalg.norm(head.position - self.pattern.slots[0]) <= 1e-9
            if head.state is DroneState.QUEUED and head.dwelling and at_head:
                head.state = DroneState.ADMITTED
                head.slot = None
                del self.occupancy[0]
                del self.members[head_id]
                admitted = head_id
        shifted = False
        for k in range(1, self.capacity):
            if k in self.occupancy and k - 1 not in self.occupancy:
                drone_id = self.occupancy.pop(k)
                self.occupancy[k - 1] = drone_id
                self.members[drone_id].slot = k - 1
                shifted = True
        self._shifts += shifted
        self.ticks += 1
        self.last_tick_time = now
        self.next_admission_time = self.start_time + (self.ticks + 1) / self.lam
        self._check()
        return admitted

    def _gossip_eligible(self, slot: int) -> Drone | None:
        drone_id = self.occupancy.get(slot)
        if drone_id is None:
            return None
        drone = self.members[drone_id]
        if drone.state is DroneState.QUEUED and drone.dwelling:
            return drone
        return None

    def gossip_round(self) -> list[tuple[int, int]]:
        """Adjacent pairs whose front drone has more flight time left than the one behind.

        Rounds alternate between even and odd pairs (odd-even transposition),
        counted in the frame of the drones so the alternation survives the
        queue shifting forward between rounds.  Pairs never share a drone and
        are listed from the head.
        """
        if not self.policy.reorders:
            raise PolicyMismatch("gossip rounds only run under the least-remaining-flight-time policy")
        phase = (self.gossip_rounds + self._shifts) % 2
        self.gossip_rounds += 1
        decisions = []
        for k in range(phase, self.capacity - 1, 2):
            front, back = self._gossip_eligible(k), self._gossip_eligible(k + 1)
            if front and back and front.remaining_flight_time > back.remaining_flight_time:
                decisions.append((k, k + 1))
        return decisions

    def execute_swap(self, k: int, k_next: int, now: float) -> dict[int, int]:
        """Exchange the drones in slots ``k`` and ``k + 1``.

        Both drones enter ``SWAPPING`` with each other as partner; the engine
        flies them along :func:`swap_paths` and returns them to ``QUEUED``.
        """
        if k_next != k + 1:
            raise ValueError("only adjacent slots can swap")
        if k not in self.occupancy or k_next not in self.occupancy:
            raise SlotEmpty(f"swap needs both slots {k} and {k_next} occupied")
        if now + self.policy.swap_duration > self.next_admission_time + TIME_EPS:
            raise SwapWindowTooShort(
                f"swap of {self.policy.swap_duration}s does not fit before the tick at {self.next_admission_time}"
            )
        a, b = self.members[self.occupancy[k]], self.members[self.occupancy[k_next]]
        for d in (a, b):
            if d.state is not DroneState.QUEUED:
                raise ValueError(f"drone {d.id} is {d.state.value}, not queued")
        self.occupancy[k], self.occupancy[k_next] = b.id, a.id
        a.slot, b.slot = k_next, k
        a.state = b.state = DroneState.SWAPPING
        a.partner_id, b.partner_id = b.id, a.id
        self._check()
        return dict(self.occupancy)

    def finish_swap(self, drone: Drone) -> None:
        drone.state = DroneState.QUEUED
        drone.partner_id = None

    def remove(self, drone_id: int) -> None:
        """Vacate whatever the drone holds (slot reservation or hold position)."""
        drone = self.members.pop(drone_id, None)
        if drone is not None:
            if drone.slot is not None and self.occupancy.get(drone.slot) == drone_id:
                del self.occupancy[drone.slot]
            drone.slot = None
        else:
            self.held = deque(h for h in self.held if h.id != drone_id)
        self._check()

    def _check(self) -> None:
        ids = list(self.occupancy.values())
        assert len(ids) == len(set(ids)), "a drone occupies two slots"
        assert len(ids) <= self.capacity, "occupancy exceeds slot count"
        assert all(0 <= k < self.capacity for k in self.occupancy), "slot index out of range"


def swap_paths(
    p: np.ndarray, q: np.ndarray, lateral_offset: float, plane_normal: np.ndarray
) -> Callable[[float], tuple[np.ndarray, np.ndarray]]:
    """Antipodal half-ellipse trajectories exchanging positions ``p`` and ``q``.

    Returns ``f(tau)`` for ``tau`` in [0, 1] giving the positions of the drone
    leaving ``p`` and the drone leaving ``q``.  The pair is displaced to
    opposite sides by ``lateral_offset`` at the midpoint, so their separation
    is ``sqrt(d^2 cos^2(pi tau) + 4 l^2 sin^2(pi tau))`` and never drops
    below ``min(d, 2 l)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mid = (p + q) / 2
    half = (q - p) / 2
    dist = np.linalg.norm(q - p)
    u = (q - p) / dist
    side = np.cross(plane_normal, u)
    if np.linalg.norm(side) < 1e-9:
        helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        side = np.cross(u, helper)
    side = side / np.linalg.norm(side) * lateral_offset

    def at(tau: float) -> tuple[np.ndarray, np.ndarray]:
        tau = min(max(tau, 0.0), 1.0)
        c, s = math.cos(math.pi * tau), math.sin(math.pi * tau)
        if tau == 1.0:
            return q.copy(), p.copy()
        return mid - c * half + s * side, mid + c * half - s * side

    return at


"""Flight-pattern staging queues for drones entering narrow openings."""

from .dispatch import AssignmentDecision, DispatchConfig, HybridGroup, Opening, Orchestrator, Weights, assign_opening, validate_rates
from .errors import ConfigInvalid, FlightQError, InvalidSpec, RateMismatch, ScenarioParseError, ScenarioValidationError
from .geometry import (
    Circle,
    Ellipse,
    Nested2D,
    Orientation,
    Pattern,
    PatternSpec,
    Rectangle,
    Stacked3D,
    ZigZag,
    build_pattern,
    min_slot_clearance,
    required_speed,
)
from .pattern_queue import HOLD, Drone, DroneState, PatternQueue, Policy, PolicyKind, swap_paths
from .scenario import OpeningConfig, Scenario, load_scenario, parse_scenario, render_scenario
from .sim_engine import Metrics, SimConfig, SimState, build_state, check_separation, run, step
from .workload import Burst, PoissonArrivals, SpawnBox, SpawnShell, StagFlocks, WorkloadSpec, generate, rose_desk_scale

__version__ = "0.1.0"

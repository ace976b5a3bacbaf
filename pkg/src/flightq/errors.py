"""Exception hierarchy shared by every flightq module."""

from __future__ import annotations


class FlightQError(Exception):
    """Base class for all library errors."""


class InvalidSpec(FlightQError, ValueError):
    """A pattern or workload specification violates its invariants."""


class InvalidRate(FlightQError, ValueError):
    pass


class IndexOutOfRange(FlightQError, IndexError):
    pass


class TooFewSlots(FlightQError, ValueError):
    pass


class DuplicateDrone(FlightQError, ValueError):
    pass


class PolicyMismatch(FlightQError):
    pass


class SwapWindowTooShort(FlightQError):
    pass


class SlotEmpty(FlightQError):
    pass


class RateMismatch(FlightQError, ValueError):
    """Shared-mode opening rates do not add up to the infrastructure rate."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = residual
        super().__init__(message or f"RateMismatch: sum of opening rates differs from total by {residual:.12g}")


class EmptyOpeningSet(FlightQError, ValueError):
    pass


class UnmappedDroneClass(FlightQError, KeyError):
    pass


class UnknownAssignment(FlightQError, KeyError):
    pass


class InvalidScale(FlightQError, ValueError):
    pass


class ConfigInvalid(FlightQError):
    """Raised with every problem found in a scenario, not just the first."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class ScenarioParseError(ConfigInvalid):
    pass


class ScenarioValidationError(ConfigInvalid):
    pass

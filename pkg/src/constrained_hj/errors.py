"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class ConstrainedHJError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ConstrainedHJError, ValueError):
    """An evaluation point lies outside the declared validity box."""

    def __init__(self, coordinate: str, value: float, bounds: tuple[float, float]):
        self.coordinate = coordinate
        self.value = value
        self.bounds = bounds
        super().__init__(
            f"{coordinate}={value!r} outside validity interval [{bounds[0]}, {bounds[1]}]"
        )


class ModelInvalidError(ConstrainedHJError, ValueError):
    """Model data violates a structural requirement (e.g. B <= 0)."""


class ConvexityError(ConstrainedHJError, ValueError):
    """Samples handed to the Legendre transform are not convex."""

    def __init__(self, triple: tuple[float, float, float], defect: float):
        self.triple = triple
        self.defect = defect
        super().__init__(
            f"non-convex samples at abscissae {triple}: slope decrease {defect:.3e}"
        )


class ConfigurationError(ConstrainedHJError, ValueError):
    """Invalid scenario or configuration data."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f"key '{key}'"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}" if where else message)


class OutOfDomainError(ConstrainedHJError, ValueError):
    """Interpolation requested outside the grid bounds."""


class StepSizeError(ConstrainedHJError, RuntimeError):
    """A time step violates the scheme's stability restriction."""


class BlowUpError(ConstrainedHJError, FloatingPointError):
    """Non-finite values appeared during time stepping."""


class BoundaryProximityError(ConstrainedHJError, RuntimeError):
    """The minimum of the solution drifted too close to the truncated boundary."""


class InfeasibleMultiplierError(ConstrainedHJError, RuntimeError):
    """No admissible multiplier enforces the constraint at this step.

    ``reason`` is ``"growth"`` when even the largest admissible multiplier
    leaves the minimum negative, ``"decay"`` when the smallest one already
    leaves it positive, and ``"degenerate"`` when the step does not depend
    on the multiplier at all.
    """

    def __init__(self, message: str, reason: str, time: float | None = None):
        self.reason = reason
        self.time = time
        super().__init__(message if time is None else f"t={time:.6g}: {message}")


class DomainTooSmallError(ConstrainedHJError, RuntimeError):
    """No feasible velocity keeps the foot of a characteristic in the domain."""


class UnsupportedRunError(ConstrainedHJError, ValueError):
    """The requested post-processing needs data the run did not record."""

"""Exception hierarchy shared by every module."""


class HolofixError(Exception):
    """Base class for all library errors."""


class ArityError(HolofixError, ValueError):
    """Dimension or variable-count mismatch."""


class ResourceError(HolofixError):
    """A symbolic operation exceeded its configured term cap."""


class SeparationError(HolofixError, ValueError):
    """Points or roots are closer than the certified separation threshold."""


class PreconditionError(HolofixError, ValueError):
    """An operation's stated precondition does not hold."""


class PreconditioningError(HolofixError):
    """Generic linear preconditioning exhausted its retries."""


class DegreeError(HolofixError, ValueError):
    """Leading coefficient too small for a reliable degree."""


class CapabilityError(HolofixError):
    """The input is outside what the operation supports."""


class InteriorityError(HolofixError, ValueError):
    """A point is not strictly inside the unit ball (or disc)."""


class EmptyFeasibleSetError(HolofixError):
    """A constrained minimization has no feasible point."""


class ScheduleError(HolofixError, ValueError):
    """A shell schedule violates a named ordering constraint."""

    def __init__(self, constraint, message):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class WitnessNotFound(HolofixError):
    """No shell of a truncated schedule yields a line witness."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CertificateFailure(HolofixError):
    """A rigidity certificate could not be established."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class HypothesisViolation(HolofixError, ValueError):
    """The eigen-direction test was called with phi(b) ~ 0 (b in the exceptional set)."""

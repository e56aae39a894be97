"""Exception types shared across the workbench."""


class RouteLabError(Exception):
    """Base class for all workbench errors."""


class ParseError(RouteLabError, ValueError):
    """Malformed input document. Carries an optional location (line or field path)."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class ValidationError(RouteLabError, ValueError):
    """Structurally well-formed input that violates a model invariant."""


class UsageError(RouteLabError, ValueError):
    """An operation was called with arguments that refer to unknown or invalid state."""


class ConfigurationError(RouteLabError, ValueError):
    """Unknown provider tag or bad runtime configuration."""


class ConstraintConflict(RouteLabError):
    """A lock/order insertion that would make the side-constraint store inconsistent.

    The store is left untouched; ``report`` is a human-readable description of
    the clash (cycle path or lock/order collision).
    """

    def __init__(self, report: str):
        self.report = report
        super().__init__(report)


class InfeasibleConstraints(RouteLabError):
    """Raised by operations that cannot return a value under unsatisfiable constraints."""

    def __init__(self, witness: str):
        self.witness = witness
        super().__init__(witness)

"""Exception types shared across the package."""


class GapforgeError(Exception):
    """Base class for all package errors."""


class StructuralError(GapforgeError):
    """An input object violates a structural invariant (bad table, bad matrix, ...)."""


class PreconditionError(GapforgeError):
    """A documented precondition of an operation is not met."""


class UnsupportedGroupError(GapforgeError):
    """The operation is not defined for this kind of group."""


class ConvergenceError(GapforgeError):
    """An eigensolve did not reach the requested residual."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class ConfigError(GapforgeError):
    """A run configuration is malformed or out of range."""

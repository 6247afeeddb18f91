"""Exception and warning types raised across fockbench."""


class FockbenchError(Exception):
    """Base class for all library errors."""


class DimensionError(FockbenchError, ValueError):
    """Invalid truncation dimension, or mismatched operand dimensions."""


class InsufficientDimensionError(DimensionError):
    """The truncated basis cannot hold the requested state accurately."""

    def __init__(self, message, tail_mass=None):
        super().__init__(message)
        self.tail_mass = tail_mass


class NormalizationError(FockbenchError, ValueError):
    pass


class InconsistentMomentsError(FockbenchError, ValueError):
    pass


class InvalidGridError(FockbenchError, ValueError):
    pass


class ConfigurationError(FockbenchError, ValueError):
    pass


class IntegrationDivergedError(FockbenchError, RuntimeError):
    pass


class OptimizationFailure(FockbenchError, RuntimeError):
    """Raised when no restart converged. ``best`` holds the best partial result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class TruncationWarning(UserWarning):
    """Population on the highest retained Fock level exceeds the health threshold."""


class NegativityWarning(UserWarning):
    """The density matrix acquired a negative eigenvalue beyond the warning level."""

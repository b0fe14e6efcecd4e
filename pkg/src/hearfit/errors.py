"""Exception hierarchy shared by all hearfit modules."""


class HearfitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(HearfitError):
    """Invalid configuration (band edges, schedule arithmetic, bad flags)."""


class DomainError(HearfitError, ValueError):
    """An argument is outside its mathematical domain."""


class ConvergenceError(HearfitError):
    """Newton iteration failed to reach the stationarity tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NumericalError(HearfitError):
    """A matrix factorization or other numerical step failed."""


class OptimizationError(HearfitError):
    """Hyperparameter search could not evaluate its objective anywhere."""


class DesignError(HearfitError):
    """Filter design missed its accuracy contract."""

    def __init__(self, message: str, worst_deviation_db: float | None = None):
        super().__init__(message)
        self.worst_deviation_db = worst_deviation_db


class FormatError(HearfitError):
    """Malformed or unsupported audio / log file."""


class OrderingError(HearfitError):
    """Feedback arrived for a presentation that is not the current one."""


class StateError(HearfitError):
    """Operation invoked in the wrong session lifecycle state."""

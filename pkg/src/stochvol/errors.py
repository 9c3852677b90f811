"""Exception types shared across the package."""


class StochvolError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(StochvolError, ValueError):
    """A model specification violates a structural constraint."""


class MomentExistenceError(StochvolError, ValueError):
    """A requested moment does not exist for the given parameters.

    Carries the moment order so callers can report which statistic
    was unavailable.
    """

    def __init__(self, message: str, order: float | None = None):
        super().__init__(message)
        self.order = order


class ConfigError(StochvolError, ValueError):
    """Invalid run configuration (CLI arguments, config file, priors)."""


class DataError(StochvolError, ValueError):
    """Input data cannot be used (bad CSV, degenerate series, ...)."""


class InferenceError(StochvolError, RuntimeError):
    """Posterior sampling failed or produced unusable diagnostics."""

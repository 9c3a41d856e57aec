"""Exception types shared across the package."""


class LevyWaveError(Exception):
    """Base class for all package errors."""


class ParameterError(LevyWaveError, ValueError):
    """A parameter is outside its admissible range."""


class DivergenceError(LevyWaveError, ArithmeticError):
    """A required integral is infinite for the given parameters."""


class CoverageError(LevyWaveError, ValueError):
    """A simulation window or truncation level does not cover the request."""


class StatisticsError(LevyWaveError, ValueError):
    """Not enough Monte Carlo data for the requested statistic."""


class ConfigError(LevyWaveError, ValueError):
    """Configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")

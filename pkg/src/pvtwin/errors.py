"""Exception hierarchy shared across the package."""


class PvTwinError(Exception):
    """Base class for all package errors."""


class DomainError(PvTwinError):
    """An input is outside the mathematical domain of an operation."""


class DegenerateError(PvTwinError):
    """The model evaluates to a degenerate (dark / zero-power) state."""


class ConvergenceError(PvTwinError):
    """An iterative solver ran out of iterations."""


class InfeasibleError(PvTwinError):
    """A measured operating point is inconsistent with the model (log-domain violation)."""


class ConfigError(PvTwinError):
    """Invalid configuration or bounds."""


class DegenerateInput(PvTwinError):
    """A dark sample was passed where a daylight sample is required."""


class InsufficientData(PvTwinError):
    """Too few data points for the requested fit."""


class EmptyInput(PvTwinError):
    """An empty sequence was passed where data is required."""


class ParseError(PvTwinError):
    """A telemetry or data file row could not be parsed or is invalid."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaError(PvTwinError):
    """A data file is missing required columns."""


class IoError(PvTwinError):
    """Reading or writing an output artifact failed."""

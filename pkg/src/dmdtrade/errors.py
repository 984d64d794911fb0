"""Exception hierarchy.

Every error raised by the package derives from :class:`DmdTradeError`.  The
three intermediate classes map onto the CLI exit codes (1, 2 and 3).
"""

from __future__ import annotations


class DmdTradeError(Exception):
    exit_code = 1


class ValidationError(DmdTradeError, ValueError):
    """Bad input shape, value or configuration."""

    exit_code = 1


class DataError(DmdTradeError):
    """Market data that cannot be loaded, aligned or windowed."""

    exit_code = 2


class NumericalError(DmdTradeError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""

    exit_code = 3

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DimensionError(ValidationError):
    pass


class ConfigurationError(ValidationError):
    pass


class TrainingSpanError(ValidationError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class AlignmentError(DataError):
    pass


class CoverageError(DataError):
    pass


class WindowError(DataError):
    pass


class EmptyReportError(DataError):
    pass


class WindowTooSmallError(ValidationError):
    pass


class DegenerateDataError(NumericalError):
    pass


class DataValidationError(DataError, ValidationError):
    """Input file parsed but holds values that break an invariant."""

    exit_code = 2

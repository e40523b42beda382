"""Exception hierarchy.

Every error carries the CLI exit code it maps to. Input errors also derive
from ``ValueError`` so callers catching the builtin keep working.
"""
from __future__ import annotations


class MultiscaleError(Exception):
    exit_code = 1


# exit code 2
class ConfigurationError(MultiscaleError, ValueError):
    exit_code = 2


class KernelRangeError(ConfigurationError):
    pass


class UnsupportedModelError(ConfigurationError):
    pass


class UnsupportedProblemError(ConfigurationError):
    pass


class SingularModelError(ConfigurationError):
    pass


class DegenerateDataError(ConfigurationError):
    pass


class InsufficientRepsError(ConfigurationError):
    pass


# exit code 3
class CalibrationError(MultiscaleError):
    exit_code = 3


class InvalidQuantileError(CalibrationError, ValueError):
    pass


# exit code 4
class DataParseError(MultiscaleError, ValueError):
    exit_code = 4

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


# exit code 5
class ResolutionError(MultiscaleError):
    exit_code = 5


class PreconditionError(ResolutionError, ValueError):
    """Input does not decay at the grid ends; periodic wrap-around would corrupt the FFT."""

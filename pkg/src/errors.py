"""
Exception hierarchy shared by the library and the command-line front end.

Validation problems derive from ValueError, numerical breakdowns from
ArithmeticError; main.py maps them to exit codes 1 and 2.
"""


class SolenoidError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SolenoidError, ValueError):
    """An argument violates an operation's precondition."""


class DomainError(ValidationError):
    """Special function evaluated outside its supported domain."""


class AxisError(ValidationError):
    """Evaluation on (or too close to) the solenoid axis r = 0."""


class SupportError(ValidationError):
    """Time argument outside the support of a step-function combination."""


class DimensionError(ValidationError):
    """Operation not available in the requested spacetime dimension."""


class ConfigError(ValidationError):
    """Malformed run configuration."""

    def __init__(self, message: str, field: str = None, line: int = None, column: int = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}, column {column}")
        if location:
            message = f"{message} ({'; '.join(location)})"
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column


class NumericalError(SolenoidError, ArithmeticError):
    """A numerical procedure could not deliver the requested accuracy."""


class PoleError(NumericalError):
    """Proper time too close to a pole of 1/sin(|eB|s)."""


class TailBoundError(NumericalError):
    """Contour truncation leaves a tail above the admissible bound."""


class ConvergenceError(NumericalError):
    """Series or quadrature did not converge within its limits."""


class ContourError(NumericalError):
    """The contour does not damp the small proper-time singularity."""

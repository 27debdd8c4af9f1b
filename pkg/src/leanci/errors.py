"""Exception hierarchy.

Numerical failures (singular or degenerate matrices) derive from
``NumericalError`` so callers such as the CLI can map them to a single exit
status; malformed inputs derive from ``UsageError``.
"""


class LeanCIError(Exception):
    """Base class for all package errors."""


class NumericalError(LeanCIError):
    pass


class UsageError(LeanCIError, ValueError):
    pass


class NonFinite(NumericalError, ValueError):
    pass


class SingularMatrix(NumericalError):
    pass


class SingularGram(SingularMatrix):
    pass


class SingularCovariance(SingularMatrix):
    pass


class NonPositiveDiagonal(NumericalError, ValueError):
    pass


class NonPSDCorrelation(NumericalError, ValueError):
    pass


class DegenerateVariance(NumericalError):
    pass


class DegenerateStudentizer(DegenerateVariance):
    pass


class PreconditionViolated(NumericalError):
    pass


class DimensionMismatch(UsageError):
    pass


class InvalidLevel(UsageError):
    pass


class InvalidSpec(UsageError):
    pass


class EmptyInput(UsageError):
    pass


class ParseError(UsageError):
    """Malformed CSV content; ``row`` and ``column`` are 1-based."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NonNumericCell(ParseError):
    pass


class MissingColumn(UsageError):
    pass

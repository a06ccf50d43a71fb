"""Exception hierarchy.

The CLI maps these onto exit codes: usage-type errors exit with 1,
:class:`DataError` with 2 and :class:`NumericalError` with 3.
"""


class CopulaError(Exception):
    """Base class for every error raised by nmcopula."""


class InvalidParametersError(CopulaError, ValueError):
    """Copula parameters fall outside the family's domain."""


class UnorderedParametersError(InvalidParametersError):
    """Breakpoints of a piecewise map are not in non-decreasing order."""


class InvalidTransformError(CopulaError, ValueError):
    """A transform does not satisfy the conditions required to build a copula."""


class InvalidModelError(CopulaError, ValueError):
    """A (base copula, transform) pair cannot form a valid model."""


class InvalidCombinationError(CopulaError, ValueError):
    """Unknown or unsupported (family, transform) combination."""


class BoundaryEvaluationError(CopulaError, ValueError):
    """A density was requested on the boundary of the unit square."""


class EmptyPreimageError(CopulaError, ValueError):
    """A pseudo-inverse was requested outside the range of the transform."""


class DataError(CopulaError, ValueError):
    """Problem with user supplied data."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateDateError(DataError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"duplicate date {date}")


class UnmappedColumnError(DataError):
    def __init__(self, column, available):
        self.column = column
        super().__init__(
            f"column {column!r} not found in header (available: {', '.join(available)})"
        )


class NonPositivePriceError(DataError):
    pass


class TooShortSeriesError(DataError):
    pass


class DegenerateSampleError(DataError):
    """Sample cannot identify the model (constant column, too few points)."""


class NumericalError(CopulaError, ArithmeticError):
    """Base class for numerical failures."""


class NonPositiveDensityError(NumericalError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"density {value!r} is not positive at observation {index}")


class AllFitsFailedError(NumericalError):
    pass

"""Exception hierarchy shared by all modules.

Every exception carries an ``exit_code`` that the command-line front end
uses verbatim: 2 usage, 3 data/format error, 4 numerical failure.
"""


class IllposedError(Exception):
    exit_code = 3


class UsageError(IllposedError):
    exit_code = 2


# data / format errors (exit 3)


class DataError(IllposedError, ValueError):
    exit_code = 3


class FormatError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatch(DataError):
    pass


class InvalidOrder(DataError):
    pass


class InvalidSpec(DataError):
    pass


class GridMismatch(DataError):
    pass


class NonOrthonormalSubspace(DataError):
    pass


class WindowTooSmall(DataError):
    pass


class TooManyTerms(DataError):
    pass


class OutOfRange(DataError):
    pass


class PreconditionViolated(DataError):
    pass


class RankZero(DataError):
    pass


class RankOrderViolation(DataError):
    pass


class RangeInclusionViolated(DataError):
    """Raised when ``A'`` has a component outside the numerical range of ``A``."""

    def __init__(self, message, residual=None, range_constant=None):
        self.residual = residual
        self.range_constant = range_constant
        super().__init__(message)


# numerical failures (exit 4)


class NumericalFailure(IllposedError, ArithmeticError):
    exit_code = 4


class SolveFailure(NumericalFailure):
    pass


class IoError(IllposedError, OSError):
    exit_code = 3

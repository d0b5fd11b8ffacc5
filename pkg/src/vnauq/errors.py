"""Exception hierarchy shared by the vnauq modules."""


class VnauqError(Exception):
    """Base class for every error raised by this package."""


class InsufficientSampleError(VnauqError, ValueError):
    pass


class DegenerateSampleError(VnauqError, ValueError):
    pass


class SkewnessRangeError(VnauqError, ValueError):
    """Requested skewness is outside what the skew-normal family can reach."""


class SingularDenominatorError(VnauqError, ArithmeticError):
    pass


class SingularSystemError(VnauqError, ArithmeticError):
    pass


class UnphysicalModelError(VnauqError, ValueError):
    pass


class ScenarioError(VnauqError, ValueError):
    pass


class ExcessiveDiscardError(VnauqError, RuntimeError):
    pass


class ParseError(VnauqError, ValueError):
    """Input text could not be parsed; carries the 1-based line (and column)."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)

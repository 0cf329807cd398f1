"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its allowed domain."""


class GeometryError(ArithmeticError):
    """The wall-crossing geometry is inconsistent with its preconditions."""


class ParseError(ValueError):
    """A data, model or config file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergenceError(FloatingPointError):
    """Training produced non-finite parameters or loss."""


class RankDeficiencyError(ValueError):
    """The normal equations are singular."""


class ShapeError(ValueError):
    """Input dimensions do not match what the model expects."""


class RelativeMetricError(ValueError):
    """Relative metrics are undefined because the actual values are constant.

    The absolute metrics are still available on ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial

"""Exception hierarchy. Everything raised on bad input derives from ``TriOptError``."""


class TriOptError(Exception):
    pass


class InvalidDimensionError(TriOptError, ValueError):
    pass


class InvalidScaleError(TriOptError, ValueError):
    pass


class InvalidSampleCountError(TriOptError, ValueError):
    pass


class InsufficientSamplesError(TriOptError, ValueError):
    pass


class ShapeError(TriOptError, ValueError):
    pass


class EmptySelectionError(TriOptError, ValueError):
    pass


class ConstraintViolationError(TriOptError, ValueError):
    pass


class InvalidFractionError(TriOptError, ValueError):
    pass


class NumericalError(TriOptError, ArithmeticError):
    """Cholesky (or another factorization) broke down.

    ``pivot`` is the 1-based index of the leading minor that failed, when known.
    """

    def __init__(self, message, pivot=None, smallest_pivot=None):
        super().__init__(message)
        self.pivot = pivot
        self.smallest_pivot = smallest_pivot


class RankDeficiencyError(NumericalError):
    def __init__(self, message, column):
        super().__init__(message)
        self.column = column


class DivergenceError(NumericalError):
    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


class DataParseError(TriOptError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row

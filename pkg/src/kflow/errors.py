"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures to a category without inspecting messages.
"""


class KFlowError(Exception):
    exit_code = 1


class InputError(KFlowError, ValueError):
    """Bad shapes, too-short series, invalid configuration values."""

    exit_code = 2


class LengthError(InputError):
    """A source series ran out before the requested number of samples."""


class NumericError(KFlowError, ArithmeticError):
    exit_code = 3


class FitError(NumericError):
    """Cholesky factorization of ``K + lambda*I`` failed.

    ``pivot`` is the zero-based index of the first non-positive pivot.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DivergenceError(NumericError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class TrainingError(NumericError):
    pass


class MetricError(NumericError):
    pass


class IOFailure(KFlowError, OSError):
    exit_code = 4

"""Exceptions raised by the complementary sketching library."""


class ComplementarySketchError(Exception):
    """Base class for every error raised by ``sketch_testing``."""


class DimensionError(ComplementarySketchError, ValueError):
    """Shapes or sizes violate a precondition (empty null space, p >= n, ...)."""


class ConfigurationError(ComplementarySketchError, ValueError):
    """Tuning parameters are missing or out of range."""


class NumericalError(ComplementarySketchError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is numerically singular."""


class ReplicateBudgetExceeded(NumericalError):
    """Too many Monte Carlo replicates failed for a grid cell to be reported."""

    def __init__(self, failures, reps, first_error=None):
        self.failures = failures
        self.reps = reps
        self.first_error = first_error
        message = f'{failures} of {reps} replicates failed'
        if first_error is not None:
            message += f' (first failure: {first_error})'
        super().__init__(message)

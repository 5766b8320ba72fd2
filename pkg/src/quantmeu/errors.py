"""Exception types shared across the package."""


class QuantmeuError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(QuantmeuError, ValueError):
    """Array or layer dimensions do not line up."""


class DomainError(QuantmeuError, ValueError):
    """Scalar argument outside its mathematical domain (e.g. tau not in (0,1))."""


class DataError(QuantmeuError, ValueError):
    """Training data or table contents violate a precondition."""


class SimulationError(QuantmeuError, RuntimeError):
    """A sampler or utility evaluation produced a non-finite value.

    Carries the offending row index when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularDesignError(QuantmeuError, ValueError):
    """Regression design matrix is rank deficient."""


class NumericError(QuantmeuError, ArithmeticError):
    """A numeric evaluation diverged or returned non-finite values."""

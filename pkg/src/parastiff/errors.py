"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid construction or configuration parameters."""


class ShapeError(ValueError):
    """Array arguments with inconsistent shapes or lengths."""


class ContractError(ValueError):
    """An operation was called with data that violates its preconditions."""


class NumericError(ArithmeticError):
    """Non-finite data or a failed factorization."""


class UnsupportedMethodError(ValueError):
    """Runge-Kutta coefficients outside the supported class."""


class AliasingError(ValueError):
    """Spectral content that the quadrature rule cannot resolve."""


class DivergenceError(RuntimeError):
    """An iteration produced non-finite values.

    Carries whatever trace was collected up to the failure and the last
    finite iterate, when available.
    """

    def __init__(self, message, trace=None, last_theta=None):
        super().__init__(message)
        self.trace = trace
        self.last_theta = last_theta

"""Exception types shared across the package."""


class RoughHedgeError(Exception):
    """Base class for all package errors."""


class GridError(RoughHedgeError):
    """A time is not on the grid, or two objects live on different grids."""


class DomainError(RoughHedgeError):
    """An argument is outside the mathematical domain of the operation."""


class QuadratureError(RoughHedgeError):
    """A quadrature failed its convergence or finiteness check."""


class NotSpannedError(RoughHedgeError):
    """The hedging constraints cannot be met by the given instruments."""

    def __init__(self, message, time=None, residual=None):
        super().__init__(message)
        self.time = time
        self.residual = residual


class RankDeficientError(RoughHedgeError):
    """The Greeks matrix lost rank along the path."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConvexityViolatedError(RoughHedgeError):
    """A hedging option that must have positive gamma does not."""


class SamplingBudgetError(RoughHedgeError):
    """Rejection sampling exhausted its attempt budget."""

    def __init__(self, message, attempts=0, accepted=0):
        super().__init__(message)
        self.attempts = attempts
        self.accepted = accepted
        self.acceptance_rate = accepted / attempts if attempts else 0.0


class NoStochasticPart(RoughHedgeError):
    """Raised when a multi-index has no trailing stochastic letter to peel off."""

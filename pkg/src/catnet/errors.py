"""Exception types raised across the package."""


class CatnetError(Exception):
    """Base class for every error raised by catnet."""


class AllZero(CatnetError, ValueError):
    pass


class DimensionMismatch(CatnetError, ValueError):
    pass


class TooLarge(CatnetError):
    """Requested object would be too large to materialize."""


class DimensionTooLarge(TooLarge):
    pass


class TooManyFamilies(TooLarge):
    pass


class PivotNotInSupport(CatnetError, ValueError):
    pass


class SingularJacobian(CatnetError, ArithmeticError):
    pass


class PriorViolation(CatnetError, ValueError):
    pass


class Infeasible(CatnetError):
    """System A(k) has no nonnegative solution.

    ``phase1_value`` is the optimal sum of artificial variables; ``certificate``
    is filled in when a Farkas vector has been computed for the same instance.
    """

    def __init__(self, message, phase1_value=float("nan"), certificate=None):
        super().__init__(message)
        self.phase1_value = phase1_value
        self.certificate = certificate


class GreedyFailure(CatnetError):
    """The greedy constructor ran out of pivot time before meeting every requirement."""

    def __init__(self, message, residuals, trace=None):
        super().__init__(message)
        self.residuals = residuals
        self.trace = trace

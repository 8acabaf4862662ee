"""Exception types shared across the package."""


class SymidError(Exception):
    """Base class for numerical/domain failures raised by this package."""


class NotPositiveDefiniteError(SymidError):
    """A matrix required to be symmetric positive definite is not."""


class HorizontalSolveError(SymidError):
    """The skew-symmetric linear operator of the horizontal projection is
    singular or numerically rank-deficient (the joint eigenvector/kernel
    assumption fails at this point)."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class SubspaceOrderError(SymidError):
    """The requested model order exceeds the numerical rank of the data."""


class NormUndefinedError(SymidError):
    """H2/H-infinity norm requested for a system that is not Hurwitz-stable."""

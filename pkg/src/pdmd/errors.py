"""Exception and warning types shared across the package."""


class PDMDError(Exception):
    """Base class for all errors raised by pdmd."""


class InvalidInput(PDMDError, ValueError):
    """Malformed or inconsistent input (shapes, non-finite entries, ...)."""


class DegenerateInput(InvalidInput):
    """Input is well formed but degenerate, e.g. an all-zero matrix."""


class NumericalFailure(PDMDError, ArithmeticError):
    """A numerical kernel failed or produced an unusable result."""


class SingularEigenvalue(NumericalFailure):
    """A discrete-time eigenvalue is too close to zero to take its logarithm."""


class SpecRejected(InvalidInput):
    """A data-generation spec cannot be realized (e.g. unstable operator)."""


class DivergenceDetected(NumericalFailure):
    """A baseline model blew up. Carries whatever trajectory was produced."""

    def __init__(self, message, theta=None, trajectory=None):
        super().__init__(message)
        self.theta = theta
        self.trajectory = trajectory


class RankDeficiencyWarning(UserWarning):
    """Requested truncation rank exceeds the numerical rank of the data."""


class IllConditioned(UserWarning):
    """Training parameters do not excite every parameter function."""

"""Exception types shared across the package."""


class TRiccatiError(Exception):
    """Base class for numerical failures raised by this package."""


class SingularOperatorError(TRiccatiError):
    """The linear operator of a T-Sylvester equation is singular or nearly so.

    Carries the reciprocal condition estimate that triggered the failure.
    """

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class ConvergenceError(TRiccatiError):
    """An eigenvalue or spectral-radius iteration failed to converge."""


class InnerSolveError(TRiccatiError):
    """An inner (projected) solve failed; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class BasisBreakdownError(InnerSolveError):
    """A new Krylov block is numerically rank deficient and cannot be kept."""


class SingularCapacitanceError(InnerSolveError):
    """The small capacitance system of a low-rank-corrected solve is singular."""

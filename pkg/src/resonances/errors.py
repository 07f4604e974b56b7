"""Exception hierarchy shared by all modules."""


class ResonanceError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ResonanceError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericalError(ResonanceError, RuntimeError):
    """A numerical procedure failed.

    ``best`` holds the best available estimate (may be ``None``) and
    ``diagnostics`` a free-form dict describing the failure.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = dict(diagnostics or {})


class ConvergenceError(NumericalError):
    """Iteration limit reached before the requested tolerance."""


class SingularSystemError(NumericalError):
    """Normal equations (or a Jacobian) are singular."""


class PoleProximityError(NumericalError):
    """A propagator or S-matrix is evaluated on top of a pole."""


class ConsistencyError(ResonanceError):
    """Two independent computations disagree (e.g. pole count vs winding)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

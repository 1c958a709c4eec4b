"""Exception types shared across the package."""


class SuotBaryError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(SuotBaryError):
    """Malformed input: wrong shape, dimension mismatch, non-finite entries."""


class NotPositiveDefinite(SuotBaryError):
    """An eigenvalue fell below the positive-definiteness floor."""


class RetractionOutOfCone(SuotBaryError):
    """A manifold retraction left the SPD cone."""


class DeltaTooLarge(SuotBaryError):
    """Entropic regularization too strong for the closed form to apply."""


class SingularSystem(SuotBaryError):
    """A linear system to be solved is numerically singular."""


class NonConvergence(SuotBaryError):
    """An iterative routine failed its convergence / stationarity check."""


class NonFinite(SuotBaryError):
    """A computation produced non-finite values or failed a consistency check."""


class BoxViolation(SuotBaryError):
    """An optimizer iterate left the prescribed eigenvalue box."""

"""Exception hierarchy shared across the package."""


class FminlabError(Exception):
    """Base class for all package-specific errors."""


class ArgumentError(FminlabError, ValueError):
    """Invalid argument: bad shapes, out-of-range indices, unknown names."""


class SingularityError(FminlabError, ArithmeticError):
    """Operation hit a singularity (division by a jet with zero constant
    term, log/sqrt of a non-positive constant term)."""


class GeometryError(FminlabError):
    """Degenerate or inconsistent geometric data: singular induced metric,
    point off the model manifold, ambiguous orientation."""


class CapabilityError(FminlabError):
    """Requested derivatives exceed what the available jet order provides."""


class PreconditionError(FminlabError):
    """A documented operation precondition is violated."""


class IntegrationError(FminlabError):
    """ODE integration failed (NaN/overflow or no admissible step)."""


class NumericError(FminlabError):
    """Numerical solver failure (non-converged eigensolve, ...)."""


class IncompleteSpectrumError(NumericError):
    """Computed spectral window is too small to certify the count of
    negative eigenvalues."""

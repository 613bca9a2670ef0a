"""Exception types raised across the package."""


class KdnlsError(Exception):
    """Base class for all package errors."""


class GridMismatch(KdnlsError, ValueError):
    pass


class AntiderivativeOfNonMeanZero(KdnlsError, ValueError):
    pass


class InvalidCutoff(KdnlsError, ValueError):
    pass


class NonRealInput(KdnlsError, ValueError):
    pass


class RegularizedWithoutEpsilon(KdnlsError, ValueError):
    pass


class BackwardDissipativeStep(KdnlsError, ValueError):
    pass


class CutoffExceedsGrid(KdnlsError, ValueError):
    pass


class InsufficientStencil(KdnlsError, ValueError):
    pass


class DegenerateFit(KdnlsError, ValueError):
    pass


class ConfigInvalid(KdnlsError, ValueError):
    """Config failed validation; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericalBlowup(KdnlsError, FloatingPointError):
    """Raised when a step produces non-finite coefficients.

    ``last_good`` carries the state before the failing step.
    """

    def __init__(self, message, last_good=None, time=None):
        super().__init__(message)
        self.last_good = last_good
        self.time = time

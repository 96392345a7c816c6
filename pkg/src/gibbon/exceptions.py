"""Exception types raised across the package."""


class GibbonError(Exception):
    """Base class for package errors."""


class InputValidationError(GibbonError, ValueError):
    """Raised when inputs violate a documented precondition."""


class FactorisationError(GibbonError, ArithmeticError):
    """Raised when a covariance matrix cannot be factorised even with jitter."""


class FitError(GibbonError, RuntimeError):
    """Raised when a surrogate model cannot be fitted."""


class RejectionSamplingError(GibbonError, RuntimeError):
    """Raised when the acceptance rate of a rejection sampler is too low."""

"""Exception hierarchy shared by every module."""


class AsdepError(Exception):
    """Base class for all library errors."""


class InvalidInputError(AsdepError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateStencilError(InvalidInputError):
    """A finite-difference stencil whose constraints force all weights to zero."""


class UnsupportedDistributionError(InvalidInputError):
    """A marginal family for which a closed-form constant is not implemented."""


class NotAvailableError(InvalidInputError):
    """Requested analytic reference does not exist for this test function."""


class SizeLimitError(InvalidInputError):
    """Input dimension exceeds a hard enumeration guard."""


class NumericError(AsdepError, ArithmeticError):
    """A numerical operation failed (non-finite data, factorization failure...)."""


class DegenerateModelError(NumericError):
    """A quantity required for normalization is zero."""

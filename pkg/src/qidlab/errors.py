"""Exception hierarchy shared by all qidlab modules."""


class QIDError(Exception):
    """Base class for every error raised by qidlab."""


class GeneratorMismatch(QIDError, ValueError):
    """Two spectra live on different generator systems."""


class DimensionMismatch(QIDError, ValueError):
    pass


class InvalidLaw(QIDError, ValueError):
    """Weights are negative, do not sum to one, or the support is empty."""


class LiftError(QIDError, ValueError):
    """Coefficient rows do not reproduce the atoms, or two atoms collide."""


class TruncationError(QIDError, ValueError):
    pass


class CertificateError(QIDError, ValueError):
    """A min-modulus certificate is missing, foreign, or too weak."""


class UnwrapError(CertificateError):
    """Phase unwrapping on the grid would be ambiguous."""


class BudgetExceeded(QIDError, RuntimeError):
    """A grid or series computation ran past its resource budget.

    ``partial`` carries whatever was computed before giving up (for
    instance the last min-modulus certificate), ``params`` the budget
    settings that were exhausted.
    """

    def __init__(self, message, partial=None, params=None):
        super().__init__(message)
        self.partial = partial
        self.params = dict(params or {})


class RealnessError(QIDError, ArithmeticError):
    """Extracted exponent coefficients carry a non-negligible imaginary part."""


class NoTriplet(QIDError, ValueError):
    """An operation needing a quasi-Levy triplet got a law without one."""

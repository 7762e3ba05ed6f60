"""Exception and warning types raised across the package."""


class QmsError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(QmsError, ValueError):
    """A matrix contains NaN/Inf entries or has the wrong shape."""


class DimError(QmsError, ValueError):
    """Operand dimensions do not match."""


class EmptyInput(QmsError, ValueError):
    pass


class ZeroVector(QmsError, ValueError):
    pass


class InvalidTime(QmsError, ValueError):
    pass


class ValidationError(QmsError, ValueError):
    """Model data violates a structural requirement (e.g. non-Hermitian H)."""


class ParseError(QmsError, ValueError):
    """Malformed model or rate-graph input."""


class InvalidRate(ValidationError):
    pass


class GridError(QmsError, ValueError):
    """Fine and coarse time grids are not commensurate."""


class NotAntiSelfAdjoint(QmsError, ValueError):
    pass


class NotApplicable(QmsError):
    """A precondition of the requested analysis does not hold for this model."""


class ToleranceAmbiguity(QmsError):
    """A rank decision sits too close to the tolerance to be trusted."""


class InternalError(QmsError, RuntimeError):
    """A proven identity failed numerically; indicates a bug or a broken tolerance."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class BoundTooLoose(UserWarning):
    """The chaos remainder bound is too large for the check to be conclusive."""

"""Exception types shared across the toolkit."""


class PolybasinError(Exception):
    """Base class for computational failures (CLI exit status 2)."""


class ValidationError(PolybasinError, ValueError):
    """Input violates an operation's precondition (CLI exit status 1)."""


class NotMonic(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class ConvergenceFailure(PolybasinError):
    """Root iteration missed its residual target.

    Soft failure: the best-effort roots and their residual travel with the
    exception so callers can skip the fiber and keep going.
    """

    def __init__(self, message, roots=None, residual=float("nan")):
        super().__init__(message)
        self.roots = roots
        self.residual = residual


class NotInBasin(PolybasinError):
    pass


class BracketFailure(PolybasinError):
    pass


class BudgetExceeded(PolybasinError):
    pass


class DegenerateDenominator(PolybasinError):
    pass

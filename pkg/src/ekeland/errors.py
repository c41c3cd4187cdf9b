"""Exception hierarchy shared by every module."""


class EkelandError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EkelandError, ValueError):
    """A point or vector does not belong to the space it was used with."""


class SpaceValidationError(EkelandError, ValueError):
    """A metric space description violates the metric axioms."""


class UnsupportedOperation(EkelandError):
    """The operation is not defined for this kind of space or functional."""


class EvaluationError(EkelandError, ArithmeticError):
    """A functional produced NaN or dipped below its declared lower bound."""


class DerivativeUndefined(EkelandError, ArithmeticError):
    """A finite-difference probe landed on a point where F is +inf."""


class NoFiniteValue(EkelandError, ValueError):
    """Every value of a finite functional is +inf."""


class RejectedStart(EkelandError):
    """The start point fails the approximate-minimizer hypothesis."""


class SpecError(EkelandError, ValueError):
    """Malformed problem description. ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

"""Exception hierarchy shared by every module."""


class RegimeSDEError(Exception):
    """Base class for all package errors."""


class DomainError(RegimeSDEError, ValueError):
    """A state lies outside the open domain U_t = {x : sigma1(t) x + sigma2(t) > 0}."""

    def __init__(self, message, t=None, x=None):
        super().__init__(message)
        self.t = t
        self.x = x


class ModeError(RegimeSDEError, ValueError):
    """Coefficient functions violate the additive/multiplicative mode invariants."""


class QuadratureError(RegimeSDEError, ArithmeticError):
    """Adaptive quadrature hit its depth limit before reaching the tolerance."""


class RangeError(RegimeSDEError, ValueError):
    """An argument is outside the range an operation accepts."""


class RegimeExhausted(RegimeSDEError, IndexError):
    """A finite alpha list was asked for a regime index past its end."""


class MonotonicityError(RegimeSDEError):
    """The distribution function is not increasing where the solver needs it to be."""

    def __init__(self, message, t=None, g=None):
        super().__init__(message)
        self.t = t
        self.g = g


class VerdictMismatch(RegimeSDEError):
    """A pathology construction was requested for a problem with a different verdict."""


class DomainExit(RegimeSDEError):
    """Particles left the closure of U_t during raw Euler stepping."""

    def __init__(self, message, t=None, count=0, result=None):
        super().__init__(message)
        self.t = t
        self.count = count
        self.result = result


class ProblemFileError(RegimeSDEError, ValueError):
    """A problem file failed to parse or validate."""

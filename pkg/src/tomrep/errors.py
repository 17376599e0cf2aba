"""Exception types raised across the package."""


class TomrepError(Exception):
    """Base class for package errors."""


class RangeError(TomrepError, ValueError):
    """An argument lies outside the supported numeric range."""


class InvalidStateError(TomrepError, ValueError):
    """Input does not describe a physical state (or violates a stated inequality)."""


class DomainError(TomrepError, ValueError):
    """Operation is undefined for this input (degenerate angle, non-pure state, ...)."""


class InvalidFrameError(TomrepError, ValueError):
    """Reference frame (mu, nu) = (0, 0)."""


class AccuracyError(TomrepError, ArithmeticError):
    """Numerical procedure missed its tolerance. Carries the best estimate."""

    def __init__(self, message, best=None, error=None):
        super().__init__(message)
        self.best = best
        self.error = error


class DivergenceError(TomrepError, ArithmeticError):
    """ODE state became NaN/Inf."""

    def __init__(self, message, last_time=None):
        super().__init__(f"{message} (last finite time {last_time})")
        self.last_time = last_time

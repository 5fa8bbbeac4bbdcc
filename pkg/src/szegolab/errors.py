"""Exception types shared across the library."""


class SzegoLabError(Exception):
    """Base class for all library errors."""


class CapabilityError(SzegoLabError):
    """A derivative (or other evaluator) was requested beyond the trusted order."""


class InvalidArgumentError(SzegoLabError, ValueError):
    """A caller-supplied argument violates a precondition."""


class IntegralFailureError(SzegoLabError):
    """A quadrature did not converge; carries diagnostics."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IntegrandError(SzegoLabError):
    """The integrand returned a non-finite value; carries the location."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DivergenceError(SzegoLabError):
    """A half-line integral shows no decay (panel contributions not shrinking)."""


class UnboundedBelowError(SzegoLabError):
    """Convex minimization found no interior minimum in the expanded bracket."""


class InfiniteWidthError(SzegoLabError):
    """A sublevel-set boundary was never reached on one side (flat function)."""


class BracketOverflowError(SzegoLabError):
    """Monotone inversion could not bracket the target below the cap."""


class SingularSystemError(SzegoLabError):
    """A Vandermonde system is singular (coincident squared directions)."""

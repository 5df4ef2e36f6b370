"""Exception types raised by the solvers.

Every solver abort maps onto one of these so that callers (and the CLI exit
code) can tell a physics failure from a programming error.
"""


class EmRelaxError(Exception):
    """Base class for all library errors."""


class NonZeroMeanRhs(EmRelaxError, ValueError):
    """Periodic Poisson source with non-vanishing mean (no solution exists)."""


class NoConvergence(EmRelaxError, RuntimeError):
    def __init__(self, max_iter, residual=None):
        self.max_iter = max_iter
        self.residual = residual
        msg = f"no convergence within {max_iter} iterations"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        super().__init__(msg)


class NegativeDensityIterate(EmRelaxError, RuntimeError):
    """Damped Newton could not keep the density iterate positive."""


class NonPositiveDensity(EmRelaxError, RuntimeError):
    """A state or step produced n <= 0."""


class CflViolation(EmRelaxError, RuntimeError):
    """Requested time step exceeds the explicit stability limit."""


class ConstraintDrift(EmRelaxError, RuntimeError):
    """Gauss-law or solenoidal constraint residual exceeded its tolerance."""


class GridMismatch(EmRelaxError, ValueError):
    """Two trajectories or fields live on incompatible grids or times."""


class DegenerateFit(EmRelaxError, ValueError):
    """Rate fit requested with too few rows or non-positive errors."""


class SweepFailure(EmRelaxError, RuntimeError):
    """A solver error raised inside one sweep entry; the cause is chained."""

    def __init__(self, epsilon, cause):
        self.epsilon = epsilon
        if isinstance(cause, BaseException):
            cause = f"{type(cause).__name__}: {cause}"
        super().__init__(f"epsilon={epsilon}: {cause}")

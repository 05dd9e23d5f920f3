"""Exception types shared across the package."""


class RingQedError(Exception):
    """Base class for domain errors."""


class LayoutError(RingQedError, ValueError):
    """Tensor-factor layouts are inconsistent or a factor label is unknown."""


class DimensionError(RingQedError, ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class IntegrationError(RingQedError, RuntimeError):
    """Time integration failed; carries the last time reached."""

    def __init__(self, message, t_reached=None):
        super().__init__(message)
        self.t_reached = t_reached


class ConvergenceError(RingQedError, RuntimeError):
    """Steady-state search hit its time cap; carries the final residual."""

    def __init__(self, message, residual=None, t_reached=None):
        super().__init__(message)
        self.residual = residual
        self.t_reached = t_reached


class DegenerateSteadyStateError(RingQedError, RuntimeError):
    """The Liouvillian kernel is not one dimensional."""


class SingularRateError(RingQedError, ValueError):
    """An analytic rate formula was evaluated at an unregularized pole."""


class UnmeasurableModeError(RingQedError, ValueError):
    """Two-time correlation requested for a mode with no steady occupation."""


class FitError(RingQedError, RuntimeError):
    """Curve fitting failed or the data do not match the fit model."""

"""Exception hierarchy shared by every riotwave module."""


class RiotwaveError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(RiotwaveError, ValueError):
    """A model or dimensional parameter violates its admissible range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(RiotwaveError, ValueError):
    """A function was evaluated outside its domain of definition."""


class NumericalFailure(RiotwaveError, RuntimeError):
    """An iterative or bracketing method failed to converge."""

    def __init__(self, message, **context):
        self.context = context
        if context:
            extra = ", ".join(f"{k}={v!r}" for k, v in context.items())
            message = f"{message} ({extra})"
        super().__init__(message)


class ConfigError(RiotwaveError, ValueError):
    """Invalid run configuration (bad key, inconsistent sections, CFL violation...)."""


class CFLError(ConfigError):
    """Explicit time step exceeds the diffusive stability bound."""


class BlowUpError(NumericalFailure):
    """The time integrator produced non-finite values."""


class ShapeError(RiotwaveError, ValueError):
    """Array length does not match the grid."""


class InvalidKernelError(RiotwaveError, ValueError):
    """Non-local kernel has negative entries or a malformed profile."""


class FrontError(RiotwaveError, ValueError):
    """Front tracker could not locate a unique level crossing."""


class FrontAbsentError(FrontError):
    pass


class NonMonotoneFrontError(FrontError):
    pass


class InsufficientDataError(RiotwaveError, ValueError):
    """Too few samples for a speed fit."""


class DomainTooSmallError(RiotwaveError, RuntimeError):
    """The front reached the boundary margin before a usable measurement."""


class NoTransitionError(RiotwaveError, ValueError):
    """Bisection bracket does not contain a verdict change."""

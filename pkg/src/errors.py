"""Exception hierarchy and CLI exit codes."""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class MultirootError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(MultirootError, ValueError):
    """Invalid parameters, configuration documents or settings."""


class NoClosedFormError(MultirootError):
    """A generating model has no registered closed-form flow."""


class InsufficientSpanError(MultirootError, ValueError):
    """A trajectory is too short for the requested period test."""


class NumericalError(MultirootError):
    """Numerical failure; `t` is the time at which it happened, when known."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t

    def __str__(self) -> str:
        base = super().__str__()
        return f"{base} (t={self.t:.17g})" if self.t is not None else base


class CollisionError(NumericalError):
    """Two roots closer than the collision threshold."""

    def __init__(self, message: str, pair: tuple[int, int], t: float | None = None):
        super().__init__(message, t)
        self.pair = pair


class RootTrackingError(NumericalError):
    """Newton tracking of the multiple root failed."""


class ConsistencyError(NumericalError):
    """The redundant rows of the coefficient system do not hold."""


class RootFindingError(NumericalError):
    """Polynomial root extraction failed."""


class StepUnderflowError(NumericalError):
    """Direct integrator step fell below its floor near a collision."""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, InsufficientSpanError, NoClosedFormError)):
        return EXIT_CONFIG
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_FAILURE

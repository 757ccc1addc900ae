"""Exception hierarchy and exit-code mapping for sde-envelope."""

from pydantic import ValidationError


class SdeEnvelopeError(Exception):
    """Base class for all sde-envelope errors."""


class ParameterError(SdeEnvelopeError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class ConfigurationError(SdeEnvelopeError):
    """A combination of model, scheme and estimators cannot be run."""


class PreconditionError(SdeEnvelopeError, ValueError):
    """An operation was called with inputs violating its precondition."""


class GridError(SdeEnvelopeError):
    """A quadrature grid does not capture the tails of its integrand."""


class ScheduleError(SdeEnvelopeError):
    """A checkpoint schedule is invalid or produces non-finite variances."""


class MissingInputError(SdeEnvelopeError):
    """A run directory lacks the files an operation needs."""


class BlowupError(SdeEnvelopeError):
    """More than half of an ensemble exploded numerically."""


# Exit codes of the command line interface.
EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BLOWUP = 3

INVALID_INPUT_ERRORS: tuple[type[Exception], ...] = (
    ValidationError,
    ConfigurationError,
    ParameterError,
    PreconditionError,
    GridError,
    ScheduleError,
    MissingInputError,
)


def exit_code_for(error: Exception) -> int:
    """Map an exception raised by a CLI verb to its process exit code.

    Args:
        error: The exception raised while running the verb.

    Returns:
        The exit code to terminate with.

    Raises:
        Exception: ``error`` itself when it is not a recognised sde-envelope failure.
    """
    if isinstance(error, BlowupError):
        return EXIT_BLOWUP

    if isinstance(error, INVALID_INPUT_ERRORS):
        return EXIT_INVALID

    raise error

"""Exception hierarchy and the CLI exit-code map."""

from typing import Any

from pydantic import ValidationError

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_SINGULARITY = 3
EXIT_FIT = 4
EXIT_VALIDATION = 5


class RingAnalyzerError(Exception):
    """Base exception for analysis errors.

    Extra keyword arguments are kept in ``context`` so that callers can log
    them as structured fields.
    """

    exit_code: int = 1

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize error.

        Args:
            message: Human readable message naming the violated precondition
            **context: Values that triggered the error (n, t, k, ...)
        """
        super().__init__(message)
        self.message = message
        self.context = context


class DomainError(RingAnalyzerError, ValueError):
    """An argument is outside the domain of the requested quantity."""

    exit_code = EXIT_DOMAIN


class SingularityError(RingAnalyzerError, ArithmeticError):
    """A normalizer or pivot vanishes (integer pole of M(n, t))."""

    exit_code = EXIT_SINGULARITY


class FitError(RingAnalyzerError):
    """A least-squares fit is not trustworthy."""

    exit_code = EXIT_FIT


class BracketError(RingAnalyzerError):
    """No unique sign change of the derivative was found."""

    exit_code = EXIT_FIT


class LivelockGuardError(RingAnalyzerError):
    """A simulated election exceeded the round guard."""

    exit_code = EXIT_DOMAIN


class ValidationFailure(RingAnalyzerError):
    """At least one acceptance check failed."""

    exit_code = EXIT_VALIDATION


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code.

    Args:
        exc: Raised exception

    Returns:
        Process exit code
    """
    if isinstance(exc, RingAnalyzerError):
        return exc.exit_code
    if isinstance(exc, ValidationError):
        return EXIT_DOMAIN
    return 1

from django.core.management.base import CommandError
from rest_framework.exceptions import ValidationError

EXIT_SUCCESS = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class DefocusError(Exception):
    """Base error for the engine; carries the exit code a command reports."""

    exit_code = EXIT_RUNTIME

    def __init__(self, message, exit_code=None):
        super().__init__(message)
        self.message = message
        if exit_code is not None:
            self.exit_code = exit_code


class ValidationFailure(DefocusError):
    exit_code = EXIT_VALIDATION


class ShapeMismatchError(ValidationFailure, ValueError):
    pass


class InvalidRasterError(ValidationFailure):
    pass


class InvalidDepthError(ValidationFailure, ValueError):
    pass


class InvalidCameraError(ValidationFailure, ValueError):
    pass


class InvalidConfigError(ValidationFailure, ValueError):
    pass


class ManifestError(ValidationFailure):
    pass


class RuntimeFailure(DefocusError):
    exit_code = EXIT_RUNTIME


class OutputError(RuntimeFailure):
    pass


class CheckFailure(RuntimeFailure):
    pass


class DivergenceError(RuntimeFailure):
    """Raised when the objective turns non-finite; keeps the last finite state."""

    def __init__(self, message, last_depth=None, last_loss=None):
        super().__init__(message)
        self.last_depth = last_depth
        self.last_loss = last_loss


def _flatten_detail(detail):
    if isinstance(detail, dict):
        parts = []
        for key, value in detail.items():
            inner = _flatten_detail(value)
            parts.append(inner if key == "non_field_errors" else f"{key}: {inner}")
        return "; ".join(parts)
    if isinstance(detail, (list, tuple)):
        return "; ".join(_flatten_detail(item) for item in detail)
    return str(detail)


def command_exception_handler(exc):
    """
    Turn a known exception into a CommandOutcome with a single `error:` line.
    Returns None for exceptions the engine does not know about.
    """
    from apps.cli.models import CommandOutcome

    if isinstance(exc, DefocusError):
        exit_code, message = exc.exit_code, exc.message
    elif isinstance(exc, ValidationError):
        exit_code, message = EXIT_VALIDATION, _flatten_detail(exc.detail)
    elif isinstance(exc, CommandError):
        exit_code = getattr(exc, "returncode", EXIT_VALIDATION) or EXIT_VALIDATION
        message = str(exc).removeprefix("Error: ")
    else:
        return None

    message = " ".join(str(message).split())
    return CommandOutcome(exit_code=exit_code, report=f"error: {message}")

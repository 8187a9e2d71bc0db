"""Custom exception classes and the command-line error handler."""

import sys

from app.core.logging import get_logger

logger = get_logger(__name__)


# Custom exception classes
class SafeError(Exception):
    """Base exception for all simulator errors."""

    pass


class ShapeError(SafeError):
    """Exception raised when tensor shapes violate an operation's contract."""

    pass


class ConfigError(SafeError):
    """Exception raised when a configuration value or file is invalid."""

    pass


class DataFormatError(SafeError):
    """Exception raised when an image or results file cannot be parsed.

    Attributes:
        message: Diagnostic without the offset suffix.
        offset: Byte offset of the failure, when known.
    """

    def __init__(self, message: str, offset: int | None = None) -> None:
        self.message = message
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class CheckpointError(SafeError):
    """Exception raised when a checkpoint is malformed or mismatches its config."""

    pass


class TrainingError(SafeError):
    """Exception raised when optimizer or strategy preconditions fail."""

    pass


EXIT_CODES: dict[type[SafeError], int] = {
    ConfigError: 2,
    DataFormatError: 3,
    CheckpointError: 4,
    ShapeError: 5,
    TrainingError: 6,
}


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to a process exit code.

    Args:
        exc: The exception that ended the command.

    Returns:
        The exit code of the nearest registered exception class, or 1.
    """
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1


def handle_cli_error(exc: BaseException, command: str) -> int:
    """Log a failed command and print a one-line diagnostic.

    Args:
        exc: The exception that was raised.
        command: The subcommand that failed.

    Returns:
        Non-zero exit code for the process.
    """
    logger.error(
        "cli.command_failed",
        command=command,
        error_type=type(exc).__name__,
        error_message=str(exc),
        exc_info=True,
    )
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return exit_code_for(exc)

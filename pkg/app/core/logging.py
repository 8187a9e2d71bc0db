"""Structured logging configuration for the simulator.

This module provides centralized logging setup with:
- JSON output on stderr, leaving stdout to command output
- Run ID correlation using context variables
- Hybrid dotted namespace pattern (domain.component.action_state)
- Exception formatting with exc_info for stack traces

Event Naming Pattern:
    Format: {domain}.{component}.{action}_{state}

    Examples:
        - cli.command_started
        - training.stage.epoch_completed
        - evaluation.sweep.trial_completed
        - safenet.checkpoint.save_completed
"""

import logging
import sys
import uuid
from contextvars import ContextVar

import structlog
from structlog.typing import EventDict, WrappedLogger

# Context variable for run correlation ID
run_id_var: ContextVar[str] = ContextVar("run_id", default="")


def get_run_id() -> str:
    """Get the current run ID from context.

    Returns:
        The current run ID, or empty string if not set.
    """
    return run_id_var.get()


def set_run_id(run_id: str | None = None) -> str:
    """Set run ID in context, generating one if not provided.

    Args:
        run_id: Optional run ID to set. If None, generates a new UUID.

    Returns:
        The run ID that was set.
    """
    if not run_id:
        run_id = str(uuid.uuid4())
    run_id_var.set(run_id)
    return run_id


def add_run_id(_logger: WrappedLogger, _method_name: str, event_dict: EventDict) -> EventDict:
    """Processor to add run ID to all log entries.

    Args:
        _logger: The logger instance (unused, required by structlog).
        _method_name: The logging method name (unused, required by structlog).
        event_dict: The event dictionary to process.

    Returns:
        The modified event dictionary with run_id added.
    """
    run_id = get_run_id()
    if run_id:
        event_dict["run_id"] = run_id
    return event_dict


def setup_logging(log_level: str = "INFO") -> None:
    """Configure structured logging for the process.

    Sets up structlog with JSON output and the following processors:
    - Run ID correlation
    - Context variables merging
    - Log level addition
    - ISO timestamp
    - Stack info rendering
    - Exception formatting with full tracebacks
    - JSON rendering

    Args:
        log_level: The logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).

    Raises:
        ValueError: If log_level is not a standard level name.
    """
    level_int = logging.getLevelNamesMapping().get(log_level.upper())
    if level_int is None:
        raise ValueError(f"unknown log level {log_level!r}")

    structlog.configure(
        processors=[
            add_run_id,
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level_int),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def get_logger(name: str) -> WrappedLogger:
    """Get a logger instance for a module.

    Use the hybrid dotted namespace pattern: domain.component.action_state

    Args:
        name: The logger name, typically __name__.

    Returns:
        A configured structlog logger instance.

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.info("training.stage.started", stage="A", strategy=2)
    """
    return structlog.get_logger(name)

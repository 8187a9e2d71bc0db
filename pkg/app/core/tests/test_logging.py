"""Unit tests for structured logging module."""

import json

import pytest
import structlog

from app.core.logging import (
    add_run_id,
    get_logger,
    get_run_id,
    run_id_var,
    set_run_id,
    setup_logging,
)


@pytest.fixture(autouse=True)
def reset_run_id() -> None:
    """Reset run ID context variable before each test."""
    run_id_var.set("")


def _lines(captured: str) -> list[dict[str, object]]:
    return [json.loads(line) for line in captured.strip().split("\n") if line]


def test_set_run_id_generates_uuid_when_none() -> None:
    """Test that set_run_id generates a UUID when none provided."""
    run_id = set_run_id()

    assert len(run_id) == 36  # UUID format length
    assert get_run_id() == run_id


def test_set_run_id_uses_provided_value() -> None:
    """Test that set_run_id uses provided value."""
    assert set_run_id("sweep-awgn-7") == "sweep-awgn-7"
    assert get_run_id() == "sweep-awgn-7"


def test_get_run_id_returns_empty_when_not_set() -> None:
    """Test that get_run_id returns empty string when not set."""
    assert get_run_id() == ""


def test_add_run_id_processor_adds_id_to_event_dict() -> None:
    """Test that add_run_id adds run_id to the event dict."""
    set_run_id("run-789")
    event_dict: dict[str, str] = {"event": "test.event"}

    result = add_run_id(None, "info", event_dict)

    assert result["run_id"] == "run-789"


def test_add_run_id_processor_skips_when_no_id() -> None:
    """Test that add_run_id doesn't add an empty run_id."""
    result = add_run_id(None, "info", {"event": "test.event"})

    assert "run_id" not in result


def test_setup_logging_configures_structlog() -> None:
    """Test that setup_logging leaves structlog usable."""
    setup_logging(log_level="DEBUG")

    assert structlog.get_logger("test") is not None


def test_logging_writes_json_to_stderr(capsys: pytest.CaptureFixture[str]) -> None:
    """Test that events are JSON lines on stderr and stdout stays clean."""
    setup_logging(log_level="INFO")
    logger = get_logger("test")

    logger.info("training.stage.epoch_completed", stage="stage_a", epoch=3, val_loss=0.0125)

    captured = capsys.readouterr()
    assert captured.out == ""
    (log_data,) = _lines(captured.err)
    assert log_data["event"] == "training.stage.epoch_completed"
    assert log_data["stage"] == "stage_a"
    assert log_data["epoch"] == 3
    assert log_data["val_loss"] == 0.0125
    assert log_data["level"] == "info"
    assert "timestamp" in log_data


def test_logging_includes_run_id_when_set(capsys: pytest.CaptureFixture[str]) -> None:
    """Test that logs carry the run id set in context."""
    setup_logging(log_level="INFO")
    set_run_id("correlation-id-123")

    get_logger("test").info("cli.command_started", command="eval")

    (log_data,) = _lines(capsys.readouterr().err)
    assert log_data["run_id"] == "correlation-id-123"


def test_logging_formats_exceptions(capsys: pytest.CaptureFixture[str]) -> None:
    """Test that exc_info=True includes the formatted traceback."""
    setup_logging(log_level="ERROR")
    logger = get_logger("test")

    try:
        raise ValueError("Test error message")
    except ValueError:
        logger.error("cli.command_failed", exc_info=True)

    (log_data,) = _lines(capsys.readouterr().err)
    assert log_data["event"] == "cli.command_failed"
    assert "ValueError: Test error message" in str(log_data["exception"])
    assert "Traceback" in str(log_data["exception"])


def test_logging_respects_log_level_filter(capsys: pytest.CaptureFixture[str]) -> None:
    """Test that events below the configured level are dropped."""
    setup_logging(log_level="WARNING")
    logger = get_logger("test")

    logger.debug("test.debug_event")
    logger.info("test.info_event")
    logger.warning("test.warning_event")
    logger.error("test.error_event")

    levels = [line["level"] for line in _lines(capsys.readouterr().err)]
    assert levels == ["warning", "error"]


def test_setup_logging_rejects_unknown_level() -> None:
    """Test an unknown level name raises ValueError naming it."""
    with pytest.raises(ValueError, match="unknown log level 'LOUD'"):
        setup_logging(log_level="LOUD")


def test_setup_logging_accepts_lowercase_level(capsys: pytest.CaptureFixture[str]) -> None:
    """Test level names are case-insensitive."""
    setup_logging(log_level="debug")

    get_logger("test").debug("test.debug_event")

    (log_data,) = _lines(capsys.readouterr().err)
    assert log_data["level"] == "debug"

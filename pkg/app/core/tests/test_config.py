"""Tests for app.core.config module."""

import os
from pathlib import Path
from unittest.mock import patch

import pytest
from pydantic import BaseModel, ConfigDict

from app.core.config import (
    Settings,
    get_settings,
    load_config_file,
    parse_key_values,
    validate_config,
)
from app.core.exceptions import ConfigError
from app.shared.schemas import IntList


class _Sample(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: int = 1
    dims: IntList = (8, 8)
    name: str = "default"


def test_settings_defaults() -> None:
    """Test Settings instantiation with default values."""
    with patch.dict(os.environ, {"LOG_LEVEL": "INFO"}):
        settings = Settings()

        assert settings.app_name == "SAFE Semantic Communication Simulator"
        assert settings.version == "0.1.0"
        assert settings.log_level == "INFO"
        assert settings.safe_threads == 0


def test_settings_from_environment() -> None:
    """Test Settings can be overridden by environment variables."""
    with patch.dict(os.environ, {"SAFE_THREADS": "3", "LOG_LEVEL": "DEBUG"}):
        settings = Settings()

        assert settings.safe_threads == 3
        assert settings.log_level == "DEBUG"


def test_settings_case_insensitive() -> None:
    """Test settings are case-insensitive."""
    with patch.dict(os.environ, {"safe_threads": "5", "ENVIRONMENT": "ci"}):
        settings = Settings()

        assert settings.safe_threads == 5
        assert settings.environment == "ci"


def test_get_settings_caching() -> None:
    """Test get_settings() returns cached instance."""
    get_settings.cache_clear()

    assert get_settings() is get_settings()


def test_parse_key_values_skips_comments_and_blanks() -> None:
    """Test comments and blank lines are ignored and values are stripped."""
    text = "# header\n\ncount = 4\n  name=desk  \n"

    assert parse_key_values(text) == {"count": "4", "name": "desk"}


def test_parse_key_values_rejects_duplicates() -> None:
    """Test a repeated key names its line."""
    with pytest.raises(ConfigError, match=r"train.conf:2: duplicate key 'count'"):
        parse_key_values("count = 1\ncount = 2\n", source="train.conf")


def test_parse_key_values_rejects_lines_without_equals() -> None:
    """Test a line that is not key = value is refused."""
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        parse_key_values("count 4\n")


def test_validate_config_converts_lists_and_defaults() -> None:
    """Test comma lists are parsed and missing keys take defaults."""
    sample = validate_config({"dims": "2, 6"}, _Sample, source="x")

    assert sample.dims == (2, 6)
    assert sample.count == 1


def test_validate_config_rejects_unknown_keys() -> None:
    """Test an unknown key becomes a ConfigError naming it."""
    with pytest.raises(ConfigError, match="colour"):
        validate_config({"colour": "red"}, _Sample, source="x")


def test_load_config_file_round_trip(tmp_path: Path) -> None:
    """Test a file on disk is parsed and validated."""
    path = tmp_path / "sample.conf"
    path.write_text("count = 7\nname = run\n")

    sample = load_config_file(path, _Sample)

    assert (sample.count, sample.name) == (7, "run")


def test_load_config_file_missing(tmp_path: Path) -> None:
    """Test an unreadable file raises ConfigError."""
    with pytest.raises(ConfigError, match="cannot read config file"):
        load_config_file(tmp_path / "missing.conf", _Sample)

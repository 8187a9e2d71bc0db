"""Application configuration using pydantic-settings.

This module provides centralized configuration management:
- Environment variable loading from .env file
- Type-safe settings with validation
- Cached settings instance with @lru_cache
- Key-value config files validated against pydantic models

Config File Format:
    One ``key = value`` pair per line. Blank lines and lines starting with
    ``#`` are ignored. Lists are comma separated. Unknown keys and duplicate
    keys are errors. See docs/config-format.md for every recognised key.
"""

from functools import lru_cache
from pathlib import Path

from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.exceptions import ConfigError


class Settings(BaseSettings):
    """Process-wide configuration.

    All settings can be overridden via environment variables.
    Environment variables are case-insensitive.
    Settings are loaded from .env file if present.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        # Don't fail if .env file doesn't exist
        extra="ignore",
    )

    # Application metadata
    app_name: str = "SAFE Semantic Communication Simulator"
    version: str = "0.1.0"
    environment: str = "development"
    log_level: str = "INFO"

    # Evaluation worker pool; 0 lets the pool pick from the CPU count
    safe_threads: int = 0


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    The @lru_cache decorator ensures settings are only loaded once
    and reused across the process lifecycle.

    Returns:
        The application settings instance.
    """
    return Settings()


def parse_key_values(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse key-value config text into a raw string mapping.

    Args:
        text: The file contents.
        source: Name used in diagnostics.

    Returns:
        Mapping of key to raw (stripped) value.

    Raises:
        ConfigError: On a line without ``=``, an empty key, or a duplicate key.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def validate_config[M: BaseModel](values: dict[str, object], model: type[M], source: str) -> M:
    """Validate raw values against a config model, converting pydantic errors.

    Args:
        values: Raw key-value mapping.
        model: Pydantic model declaring every allowed key (``extra="forbid"``).
        source: Name used in diagnostics.

    Returns:
        The validated model instance.

    Raises:
        ConfigError: If a key is unknown or a value fails validation.
    """
    try:
        return model.model_validate(values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
            for err in exc.errors()
        )
        raise ConfigError(f"{source}: {problems}") from exc


def load_config_file[M: BaseModel](path: Path, model: type[M]) -> M:
    """Load a key-value config file and validate it against ``model``.

    Args:
        path: File to read.
        model: Pydantic model with a default for every field.

    Returns:
        The validated model instance.

    Raises:
        ConfigError: If the file is unreadable or invalid.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    raw = parse_key_values(text, source=str(path))
    return validate_config(dict(raw), model, source=str(path))

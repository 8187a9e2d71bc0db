"""Shared utility functions."""

import math
from datetime import UTC, datetime


def utcnow() -> datetime:
    """Get current UTC time with timezone information.

    Returns timezone-aware datetime in UTC. This should be used
    instead of datetime.utcnow() which returns naive datetimes.

    Returns:
        datetime: Current UTC time with timezone information.
    """
    return datetime.now(UTC)


def format_iso(dt: datetime) -> str:
    """Format datetime as ISO 8601 string.

    Args:
        dt: Datetime object to format.

    Returns:
        str: ISO 8601 formatted string.
    """
    return dt.isoformat()


def format_decimal(value: float, places: int = 4) -> str:
    """Fixed-point text for tables; infinities and NaN become ``inf``/``-inf``/``nan``.

    Example:
        format_decimal(20.0)          # "20.0000"
        format_decimal(math.inf)      # "inf"
    """
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    text = f"{value:.{places}f}"
    # avoid "-0.0000" so equal tables stay byte-identical
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def parse_decimal(text: str) -> float:
    """Inverse of ``format_decimal``.

    Raises:
        ValueError: If ``text`` is not a number or one of the special tokens.
    """
    return float(text.strip())

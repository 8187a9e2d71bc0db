"""Shared Pydantic field types for key-value configuration files."""

from typing import Annotated

from pydantic import BeforeValidator


def split_commas(value: object) -> object:
    """Turn ``"0, 5,10"`` into ``["0", "5", "10"]``; other values pass through.

    Key-value config files carry every value as a string, so list-valued
    fields are written comma separated.

    Example:
        class Sweep(BaseModel):
            snrs: FloatList

        Sweep.model_validate({"snrs": "0,5,10"}).snrs  # (0.0, 5.0, 10.0)
    """
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


IntList = Annotated[tuple[int, ...], BeforeValidator(split_commas)]
FloatList = Annotated[tuple[float, ...], BeforeValidator(split_commas)]


def split_pairs(value: object) -> object:
    """Turn ``"sc_decoder_2:1e-6, sfe_*:3e-4"`` into an ordered mapping.

    Keys may contain glob characters; the first ``:`` separates key from
    value. Order is kept, so earlier entries win when patterns overlap.

    Raises:
        ValueError: On an entry without ``:`` or a repeated key.
    """
    if not isinstance(value, str):
        return value
    pairs: dict[str, str] = {}
    for part in value.split(","):
        item = part.strip()
        if not item:
            continue
        key, sep, rate = item.partition(":")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"expected 'pattern:value', got {item!r}")
        if key in pairs:
            raise ValueError(f"duplicate pattern {key!r}")
        pairs[key] = rate.strip()
    return pairs


RateMap = Annotated[dict[str, float], BeforeValidator(split_pairs)]

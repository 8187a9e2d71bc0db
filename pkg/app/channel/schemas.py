"""Channel descriptions and per-transmission realizations."""

import math
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ChannelKind(StrEnum):
    """Channel family."""

    AWGN = "awgn"
    RAYLEIGH = "rayleigh"


class ChannelSpec(BaseModel):
    """A channel family plus its signal-to-noise ratio.

    ``noiseless`` is the infinite-SNR limit: the channel passes symbols
    through untouched regardless of ``snr_db``.
    """

    model_config = ConfigDict(frozen=True)

    kind: ChannelKind = ChannelKind.AWGN
    snr_db: float = 10.0
    noiseless: bool = False

    @field_validator("snr_db")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"snr_db must be finite, got {value}")
        return value


class ChannelRealization(BaseModel):
    """What one transmission drew: a fading gain per block and the noise level."""

    kind: ChannelKind
    fade: list[float] = Field(description="Per-block gain |h|; 1.0 for AWGN")
    noise_std: float
    noise_state: dict[str, object] = Field(
        default_factory=dict, description="Bit-generator state before the draw"
    )

    @field_validator("fade")
    @classmethod
    def _positive(cls, value: list[float]) -> list[float]:
        if any(g <= 0 for g in value):
            raise ValueError("fading gains must be positive")
        return value

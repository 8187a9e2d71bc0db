"""Deterministic synthetic images: overlapping anti-aliased shapes on a backdrop.

Each image is drawn at ``supersample`` times its resolution with hard-edged
rectangles, ellipses and gradient patches in random colors, then box-filtered
down, which anti-aliases every edge. Values are quantized to multiples of
1/255 so a generated dataset survives a PPM round trip unchanged.
"""

from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.logging import get_logger
from app.data.dataset import ImageDataset
from app.safenet.schemas import DOWNSAMPLE_FACTOR
from app.tensor.rng import make_rng
from app.tensor.tensor import Array

logger = get_logger(__name__)

MIN_CONTRAST = 0.25


class SyntheticSpec(BaseModel):
    """Recipe for a synthetic dataset; equal specs give identical datasets."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    count: int = Field(default=512, ge=0)
    height: int = Field(default=32, gt=0)
    width: int = Field(default=32, gt=0)
    seed: int = Field(default=0, ge=0)
    min_shapes: int = Field(default=3, ge=1)
    max_shapes: int = Field(default=8, ge=1)
    supersample: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if self.height % DOWNSAMPLE_FACTOR or self.width % DOWNSAMPLE_FACTOR:
            raise ValueError(
                f"height and width must be divisible by {DOWNSAMPLE_FACTOR}, "
                f"got {self.height}x{self.width}"
            )
        if self.min_shapes > self.max_shapes:
            raise ValueError(
                f"min_shapes {self.min_shapes} exceeds max_shapes {self.max_shapes}"
            )
        return self


def _contrasting_color(rng: np.random.Generator, against: Array) -> Array:
    while True:
        color = rng.uniform(0.0, 1.0, 3)
        if np.max(np.abs(color - against)) >= MIN_CONTRAST:
            return color


def _linear_field(
    rng: np.random.Generator, xs: Array, ys: Array, start: Array, stop: Array
) -> Array:
    """Colors blending from ``start`` to ``stop`` along a random direction, ``[3, h, w]``."""
    angle = rng.uniform(0.0, 2.0 * np.pi)
    t = np.cos(angle) * xs + np.sin(angle) * ys
    t = (t - t.min()) / max(float(np.ptp(t)), 1e-12)
    return start[:, None, None] * (1.0 - t) + stop[:, None, None] * t


def _rectangle(rng: np.random.Generator, xs: Array, ys: Array) -> Array:
    x0, y0 = rng.uniform(0.0, 0.75, 2)
    x1 = x0 + rng.uniform(0.15, 1.0 - x0)
    y1 = y0 + rng.uniform(0.15, 1.0 - y0)
    return (xs >= x0) & (xs < x1) & (ys >= y0) & (ys < y1)


def _ellipse(rng: np.random.Generator, xs: Array, ys: Array) -> Array:
    cx, cy = rng.uniform(0.15, 0.85, 2)
    rx, ry = rng.uniform(0.08, 0.4, 2)
    return ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0


def _quantize(values: Array) -> Array:
    levels = np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.float32)
    return levels / np.float32(255.0)


def synth_image(rng: np.random.Generator, spec: SyntheticSpec) -> Array:
    """Draw one ``[3, H, W]`` float32 image."""
    s = spec.supersample
    hs, ws = spec.height * s, spec.width * s
    ys, xs = np.meshgrid((np.arange(hs) + 0.5) / hs, (np.arange(ws) + 0.5) / ws, indexing="ij")

    base = rng.uniform(0.0, 1.0, 3)
    if rng.random() < 0.5:
        canvas = np.broadcast_to(base[:, None, None], (3, hs, ws)).copy()
    else:
        canvas = _linear_field(rng, xs, ys, base, _contrasting_color(rng, base))

    for _ in range(int(rng.integers(spec.min_shapes, spec.max_shapes + 1))):
        kind = int(rng.integers(3))
        mask = _ellipse(rng, xs, ys) if kind == 1 else _rectangle(rng, xs, ys)
        color = _contrasting_color(rng, base)
        if kind == 2:
            fill = _linear_field(rng, xs, ys, color, _contrasting_color(rng, color))
            canvas = np.where(mask, fill, canvas)
        else:
            canvas = np.where(mask, color[:, None, None], canvas)

    image = canvas.reshape(3, spec.height, s, spec.width, s).mean(axis=(2, 4))
    image = _quantize(image)
    flat = image.reshape(3, -1)
    if np.all(flat == flat[:, :1]):
        # single color after quantization: recolor the top half
        half = spec.height // 2
        image[:, :half] = _quantize((image[:, :half] + 0.5) % 1.0)
    return image


def synth_dataset(spec: SyntheticSpec) -> ImageDataset:
    """Generate ``spec.count`` images, image ``i`` drawn from stream ``(seed, i)``.

    Example:
        synth_dataset(SyntheticSpec(count=4, height=16, width=16, seed=1))
    """
    images = np.zeros((spec.count, 3, spec.height, spec.width), dtype=np.float32)
    for i in range(spec.count):
        images[i] = synth_image(make_rng(spec.seed, "synthetic", i), spec)
    logger.info(
        "data.synthetic.generate_completed",
        count=spec.count,
        height=spec.height,
        width=spec.width,
        seed=spec.seed,
    )
    return ImageDataset(images, provenance=f"synthetic(seed={spec.seed}, count={spec.count})")

"""Stochastic, non-trainable channel layers.

Symbols are real-valued with unit average power after ``power_normalize``.
The channel behaves as an untrainable layer: noise (and, for Rayleigh, the
equalized fading) is a constant in the backward pass, so the gradient of the
received tensor with respect to the transmitted one is the identity.
"""

import numpy as np

from app.channel.schemas import ChannelKind, ChannelRealization, ChannelSpec
from app.core.exceptions import ShapeError
from app.tensor.functional import add_constant
from app.tensor.gradcheck import GradCheckCase
from app.tensor.tensor import Array, Tensor


def power_normalize(x: Tensor, per_sample: bool = False) -> Tensor:
    """Scale ``x`` to unit average power: ``x * sqrt(M / sum(x^2))``.

    Args:
        x: Symbols to transmit.
        per_sample: Normalize each leading-axis sample over its own ``M``
            elements instead of the whole tensor.

    Raises:
        ShapeError: If the tensor (or any sample) is all zeros.
    """
    axes = tuple(range(1, x.data.ndim)) if per_sample and x.data.ndim > 1 else None
    energy = np.sum(np.square(x.data), axis=axes, keepdims=True)
    if np.any(energy == 0):
        raise ShapeError("power_normalize is undefined for an all-zero input")
    count = x.data.size if axes is None else x.data[0].size
    scale = np.sqrt(count / energy)
    out = (x.data * scale).astype(x.dtype, copy=False)

    def backward(grad: Array) -> tuple[Array]:
        # d/dx_j: scale * (g_j - x_j * <g, x> / energy)
        inner = np.sum(grad * x.data, axis=axes, keepdims=True)
        return (scale * (grad - x.data * inner / energy),)

    return Tensor.from_op(out, (x,), backward, "power_normalize")


def noise_std_for_snr(snr_db: float) -> float:
    """Noise standard deviation for unit signal power: ``sqrt(10^(-snr/10))``."""
    return float(np.sqrt(10.0 ** (-snr_db / 10.0)))


def _state(rng: np.random.Generator) -> dict[str, object]:
    return dict(rng.bit_generator.state)


def transmit_awgn(
    x: Tensor, spec: ChannelSpec, rng: np.random.Generator
) -> tuple[Tensor, ChannelRealization]:
    """Add i.i.d. Gaussian noise with the variance set by ``spec.snr_db``."""
    blocks = x.shape[0] if x.data.ndim > 1 else 1
    if spec.noiseless:
        return x, ChannelRealization(kind=ChannelKind.AWGN, fade=[1.0] * blocks, noise_std=0.0)
    sigma = noise_std_for_snr(spec.snr_db)
    state = _state(rng)
    noise = (rng.standard_normal(x.shape) * sigma).astype(x.dtype)
    realization = ChannelRealization(
        kind=ChannelKind.AWGN, fade=[1.0] * blocks, noise_std=sigma, noise_state=state
    )
    return add_constant(x, noise, op="awgn"), realization


def draw_rayleigh_gains(rng: np.random.Generator, count: int) -> Array:
    """Rayleigh magnitudes ``sqrt(a^2 + b^2) / sqrt(2)`` with ``E[h^2] = 1``."""
    a = rng.standard_normal(count)
    b = rng.standard_normal(count)
    return np.sqrt(a * a + b * b) / np.sqrt(2.0)


def transmit_rayleigh(
    x: Tensor, spec: ChannelSpec, rng: np.random.Generator
) -> tuple[Tensor, ChannelRealization]:
    """Block fading with perfect-CSI zero-forcing: ``y = x + n / h``.

    One gain is drawn per leading-axis block (one sub-semantic of one image).
    """
    blocks = x.shape[0] if x.data.ndim > 1 else 1
    state = _state(rng)
    gains = draw_rayleigh_gains(rng, blocks)
    if spec.noiseless:
        realization = ChannelRealization(
            kind=ChannelKind.RAYLEIGH, fade=gains.tolist(), noise_std=0.0, noise_state=state
        )
        return x, realization
    sigma = noise_std_for_snr(spec.snr_db)
    noise = rng.standard_normal(x.shape) * sigma
    per_block = gains.reshape((blocks,) + (1,) * (x.data.ndim - 1)) if x.data.ndim > 1 else gains
    equalized = (noise / per_block).astype(x.dtype)
    realization = ChannelRealization(
        kind=ChannelKind.RAYLEIGH, fade=gains.tolist(), noise_std=sigma, noise_state=state
    )
    return add_constant(x, equalized, op="rayleigh"), realization


def transmit(
    x: Tensor, spec: ChannelSpec, rng: np.random.Generator
) -> tuple[Tensor, ChannelRealization]:
    """Dispatch to the channel family named by ``spec.kind``."""
    if spec.kind is ChannelKind.RAYLEIGH:
        return transmit_rayleigh(x, spec, rng)
    return transmit_awgn(x, spec, rng)


def _sample_power_normalize(rng: np.random.Generator) -> list[Tensor]:
    return [Tensor(rng.standard_normal((2, 3, 2, 2)), requires_grad=True, dtype=np.float64)]


POWER_NORMALIZE_CASE = GradCheckCase(
    "power_normalize",
    lambda x: power_normalize(x, per_sample=True),
    _sample_power_normalize,
)

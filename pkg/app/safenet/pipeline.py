"""Encode, transmit and decode images through the multi-branch codec.

Routing between decoder levels follows the TrainXTransY convention: branch 0
alone decodes at level 1 (``sm_encoder``/``sc_decoder``), any set that
includes another branch decodes at level 2 (``sm_encoder_2``/``sc_decoder_2``
when the network owns them, otherwise the level-1 groups).
"""

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from app.channel.channel import power_normalize, transmit
from app.channel.schemas import ChannelRealization, ChannelSpec
from app.core.exceptions import ConfigError, ShapeError
from app.safenet.network import (
    SC_DECODER,
    SC_DECODER_2,
    SM_ENCODER,
    SM_ENCODER_2,
    ParameterGroup,
    SafeNetwork,
    sfe_encoder,
    sfr_decoder,
)
from app.safenet.schemas import SafeConfig
from app.tensor import functional as F
from app.tensor.tensor import Tensor

type BranchRng = np.random.Generator | Mapping[int, np.random.Generator]


@dataclass(frozen=True)
class SubSemantic:
    """One independently transmittable latent block ``[N, d_i, H/8, W/8]``."""

    index: int
    payload: Tensor


@dataclass(frozen=True)
class BranchTransmission:
    index: int
    transmitted: Tensor
    received: Tensor
    realization: ChannelRealization


@dataclass(frozen=True)
class PipelineOutput:
    reconstruction: Tensor
    transmissions: list[BranchTransmission]
    level: int


def normalize_subset(config: SafeConfig, subset: Iterable[int]) -> tuple[int, ...]:
    """Validate a branch subset and return it sorted.

    Raises:
        ConfigError: If the subset is empty, repeats an index, or names a
            branch outside ``0..L-1``.
    """
    indices = list(subset)
    if not indices:
        raise ConfigError("branch subset must not be empty")
    if len(set(indices)) != len(indices):
        raise ConfigError(f"branch subset {indices} contains duplicates")
    bad = [i for i in indices if not 0 <= i < config.num_branches]
    if bad:
        raise ConfigError(
            f"branch indices {bad} out of range for {config.num_branches} branches"
        )
    return tuple(sorted(indices))


def resolve_level(subset: Sequence[int], level: int | None = None) -> int:
    """Pick the decoder level: explicit, else 1 for branch 0 alone, else 2."""
    if level is None:
        return 1 if tuple(subset) == (0,) else 2
    if level not in (1, 2):
        raise ConfigError(f"decoder level must be 1 or 2, got {level}")
    return level


def trunk_group(net: SafeNetwork, level: int) -> ParameterGroup:
    if level == 2 and net.has_group(SM_ENCODER_2):
        return net.group(SM_ENCODER_2)
    return net.group(SM_ENCODER)


def combiner_group(net: SafeNetwork, level: int) -> ParameterGroup:
    if level == 2 and net.has_group(SC_DECODER_2):
        return net.group(SC_DECODER_2)
    return net.group(SC_DECODER)


def check_image(config: SafeConfig, image: Tensor) -> None:
    expected = config.image_shape
    if image.data.ndim != 4 or image.shape[1:] != expected:
        raise ShapeError(
            f"image batch shape {image.shape} does not match configured (N, *{expected})"
        )


def encode(
    net: SafeNetwork,
    image: Tensor,
    subset: Iterable[int] | None = None,
    level: int = 1,
) -> list[SubSemantic]:
    """Map images to sub-semantics.

    Runs the trunk, splits its output into contiguous channel blocks and
    applies each branch's extraction encoder to its block.

    Args:
        net: The codec.
        image: Batch ``[N, 3, H, W]`` with values in ``[0, 1]``.
        subset: Branches to extract; all ``L`` branches when None.
        level: Trunk to use (1 original, 2 cloned when present).

    Raises:
        ShapeError: If the image does not match the configured dimensions.
    """
    config = net.config
    check_image(config, image)
    indices = range(config.num_branches) if subset is None else normalize_subset(config, subset)
    features = trunk_group(net, level)(image)
    bounds = config.split_bounds
    return [
        SubSemantic(i, net.group(sfe_encoder(i))(F.slice_channels(features, *bounds[i])))
        for i in indices
    ]


def decode(
    net: SafeNetwork,
    received: Sequence[tuple[int, Tensor]],
    level: int | None = None,
    clamp_output: bool = False,
) -> Tensor:
    """Reconstruct images from any non-empty set of received sub-semantics.

    A branch that was not received contributes an all-zero recovered block
    to the concatenation fed to the combiner.

    Args:
        net: The codec.
        received: ``(index, payload)`` pairs.
        level: Decoder level; derived from the received indices when None.
        clamp_output: Clip to ``[0, 1]`` (evaluation only).

    Raises:
        ConfigError: On an empty, duplicated or out-of-range index set.
        ShapeError: If a payload does not have shape ``(N, d_i, H/8, W/8)``.
    """
    config = net.config
    indices = normalize_subset(config, (i for i, _ in received))
    level = resolve_level(indices, level)
    payloads = dict(received)
    first = payloads[indices[0]]
    n = first.shape[0]
    height, width = config.latent_hw
    blocks: list[Tensor] = []
    for i, width_i in enumerate(config.split_channels):
        if i not in payloads:
            blocks.append(Tensor(np.zeros((n, width_i, 2 * height, 2 * width), dtype=first.dtype)))
            continue
        payload = payloads[i]
        expected = (n, *config.payload_shape(i))
        if payload.shape != expected:
            raise ShapeError(f"branch {i} payload shape {payload.shape} != expected {expected}")
        blocks.append(net.group(sfr_decoder(i))(payload))
    out = combiner_group(net, level)(F.concat(blocks, axis=1))
    return F.clamp(out) if clamp_output else out


def forward_pipeline(
    net: SafeNetwork,
    image: Tensor,
    channel: ChannelSpec,
    subset: Iterable[int],
    rng: BranchRng,
    level: int | None = None,
    clamp_output: bool = False,
) -> PipelineOutput:
    """Encode, power-normalize, transmit each branch separately, then decode.

    Args:
        net: The codec.
        image: Batch ``[N, 3, H, W]``.
        channel: Channel family and SNR, shared by all branches.
        subset: Branches to transmit; the rest are dropped.
        rng: One generator drawn from sequentially, or a generator per branch.
        level: Decoder level; derived from ``subset`` when None.
        clamp_output: Clip the reconstruction to ``[0, 1]``.
    """
    indices = normalize_subset(net.config, subset)
    level = resolve_level(indices, level)
    transmissions: list[BranchTransmission] = []
    for sub in encode(net, image, indices, level):
        if isinstance(rng, Mapping):
            if sub.index not in rng:
                raise ConfigError(f"no random stream supplied for branch {sub.index}")
            branch_rng = rng[sub.index]
        else:
            branch_rng = rng
        sent = power_normalize(sub.payload, per_sample=True)
        got, realization = transmit(sent, channel, branch_rng)
        transmissions.append(BranchTransmission(sub.index, sent, got, realization))
    reconstruction = decode(
        net,
        [(t.index, t.received) for t in transmissions],
        level=level,
        clamp_output=clamp_output,
    )
    return PipelineOutput(reconstruction, transmissions, level)

"""Parameter groups and the layer plan of the multi-branch codec.

Layer plan (F = base_width, C = 2F, C_i = branch block width, d_i = branch dim):

    sm_encoder      conv(3→F) pool, conv(F→2F) pool, conv(2F→C)          PReLU
    sfe_encoder.i   conv(C_i→C_i) ×3, pool, conv(C_i→d_i)                PReLU
    sfr_decoder.i   conv(d_i→C_i), deconv(C_i→C_i), conv(C_i→C_i) ×2     ReLU
    sc_decoder      deconv(C→2F), deconv(2F→F), conv(F→3)                ReLU, last linear

Each branch path therefore crosses 3 + 4 + 4 + 3 = 14 convolution layers and
three spatial halvings. There are no skip connections between encoder and
decoder feature maps.
"""

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from app.core.exceptions import ConfigError
from app.safenet.schemas import SafeConfig
from app.tensor import functional as F
from app.tensor.rng import make_rng
from app.tensor.tensor import DEFAULT_DTYPE, Parameter, Tensor

PRELU_INIT = 0.25
KERNEL = 3

SM_ENCODER = "sm_encoder"
SC_DECODER = "sc_decoder"
SM_ENCODER_2 = "sm_encoder_2"
SC_DECODER_2 = "sc_decoder_2"


def sfe_encoder(index: int) -> str:
    return f"sfe_encoder.{index}"


def sfr_decoder(index: int) -> str:
    return f"sfr_decoder.{index}"


class LayerKind(StrEnum):
    CONV = "conv"
    DECONV = "deconv"


class Activation(StrEnum):
    PRELU = "prelu"
    RELU = "relu"
    LINEAR = "linear"


@dataclass
class Layer:
    """One 3×3 convolution or stride-2 transposed convolution plus activation."""

    kind: LayerKind
    weight: Parameter
    bias: Parameter
    activation: Activation
    slope: Parameter | None = None
    pool_after: bool = False

    def parameters(self) -> list[Parameter]:
        params = [self.weight, self.bias]
        if self.slope is not None:
            params.append(self.slope)
        return params

    def __call__(self, x: Tensor) -> Tensor:
        if self.kind is LayerKind.CONV:
            out = F.conv2d(x, self.weight, self.bias, stride=1, padding=1)
        else:
            out = F.conv_transpose2d(
                x, self.weight, self.bias, stride=2, padding=1, output_padding=1
            )
        if self.activation is Activation.PRELU and self.slope is not None:
            out = F.prelu(out, self.slope)
        elif self.activation is Activation.RELU:
            out = F.relu(out)
        if self.pool_after:
            out = F.maxpool2d(out)
        return out


@dataclass
class ParameterGroup:
    """An ordered stack of layers whose parameters share a name prefix."""

    name: str
    layers: list[Layer] = field(default_factory=list)

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    @property
    def conv_layer_count(self) -> int:
        return len(self.layers)

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


@dataclass(frozen=True)
class _LayerSpec:
    kind: LayerKind
    cin: int
    cout: int
    activation: Activation
    pool_after: bool = False


def _group_plan(config: SafeConfig, group: str) -> list[_LayerSpec]:
    f = config.base_width
    c = config.trunk_channels
    conv, deconv = LayerKind.CONV, LayerKind.DECONV
    prelu, relu = Activation.PRELU, Activation.RELU
    if group in (SM_ENCODER, SM_ENCODER_2):
        return [
            _LayerSpec(conv, config.input_channels, f, prelu, pool_after=True),
            _LayerSpec(conv, f, 2 * f, prelu, pool_after=True),
            _LayerSpec(conv, 2 * f, c, prelu),
        ]
    if group in (SC_DECODER, SC_DECODER_2):
        return [
            _LayerSpec(deconv, c, 2 * f, relu),
            _LayerSpec(deconv, 2 * f, f, relu),
            _LayerSpec(conv, f, config.input_channels, Activation.LINEAR),
        ]
    kind, _, index_text = group.partition(".")
    index = int(index_text)
    ci = config.split_channels[index]
    di = config.branch_dims[index]
    if kind == "sfe_encoder":
        return [
            _LayerSpec(conv, ci, ci, prelu),
            _LayerSpec(conv, ci, ci, prelu),
            _LayerSpec(conv, ci, ci, prelu, pool_after=True),
            _LayerSpec(conv, ci, di, prelu),
        ]
    if kind == "sfr_decoder":
        return [
            _LayerSpec(conv, di, ci, relu),
            _LayerSpec(deconv, ci, ci, relu),
            _LayerSpec(conv, ci, ci, relu),
            _LayerSpec(conv, ci, ci, relu),
        ]
    raise ConfigError(f"unknown parameter group {group!r}")


def _make_group(
    config: SafeConfig, group: str, seed: int, dtype: type[np.floating]
) -> ParameterGroup:
    rng = make_rng(seed, "init", group)
    layers: list[Layer] = []
    for k, spec in enumerate(_group_plan(config, group), start=1):
        prefix = f"{group}.{spec.kind.value}{k}"
        if spec.kind is LayerKind.CONV:
            shape = (spec.cout, spec.cin, KERNEL, KERNEL)
            fan_in = spec.cin * KERNEL * KERNEL
        else:
            shape = (spec.cin, spec.cout, KERNEL, KERNEL)
            fan_in = spec.cout * KERNEL * KERNEL
        weight = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        slope = None
        if spec.activation is Activation.PRELU:
            slope = Parameter(np.asarray(PRELU_INIT, dtype=dtype), f"{prefix}.slope", group)
        layers.append(
            Layer(
                kind=spec.kind,
                weight=Parameter(weight.astype(dtype), f"{prefix}.weight", group),
                bias=Parameter(np.zeros(spec.cout, dtype=dtype), f"{prefix}.bias", group),
                activation=spec.activation,
                slope=slope,
                pool_after=spec.pool_after,
            )
        )
    return ParameterGroup(group, layers)


def base_group_names(config: SafeConfig) -> list[str]:
    """Groups created by ``build``, in parameter order."""
    names = [SM_ENCODER]
    for i in range(config.num_branches):
        names += [sfe_encoder(i), sfr_decoder(i)]
    names.append(SC_DECODER)
    return names


class SafeNetwork:
    """A codec instance: its config plus named parameter groups.

    After two-level training a network may also own ``sm_encoder_2`` and/or
    ``sc_decoder_2``, the second-level trunk and combiner.
    """

    def __init__(self, config: SafeConfig, groups: dict[str, ParameterGroup]) -> None:
        self.config = config
        self.groups = groups

    def group(self, name: str) -> ParameterGroup:
        try:
            return self.groups[name]
        except KeyError:
            raise ConfigError(
                f"unknown parameter group {name!r}; known: {sorted(self.groups)}"
            ) from None

    def has_group(self, name: str) -> bool:
        return name in self.groups

    def parameters(self) -> list[Parameter]:
        return [p for group in self.groups.values() for p in group.parameters()]

    def named_parameters(self) -> Iterator[tuple[str, Parameter]]:
        for p in self.parameters():
            yield p.name, p

    def state(self) -> dict[str, np.ndarray]:
        """Copy every parameter's values, keyed by name."""
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        """Overwrite parameters present in ``state`` (values copied)."""
        for name, p in self.named_parameters():
            if name in state:
                np.copyto(p.data, state[name])

    def branch_conv_layers(self, index: int) -> int:
        """Convolution layers crossed by branch ``index`` through the level-1 path."""
        return (
            self.group(SM_ENCODER).conv_layer_count
            + self.group(sfe_encoder(index)).conv_layer_count
            + self.group(sfr_decoder(index)).conv_layer_count
            + self.group(SC_DECODER).conv_layer_count
        )


def build(
    config: SafeConfig, seed: int = 0, dtype: type[np.floating] = DEFAULT_DTYPE
) -> SafeNetwork:
    """Create a freshly initialized network.

    Weights are Kaiming fan-in scaled Gaussians drawn from per-group streams
    of ``seed``; biases start at zero and PReLU slopes at 0.25.

    Args:
        config: Validated network configuration.
        seed: Initialization seed.
        dtype: Parameter precision (float64 for gradient checks).

    Returns:
        The network with its base groups.
    """
    groups = {name: _make_group(config, name, seed, dtype) for name in base_group_names(config)}
    return SafeNetwork(config, groups)


def clone_group(net: SafeNetwork, src: str, dst: str) -> ParameterGroup:
    """Create ``dst`` with ``src``'s layer plan and a copy of its values.

    Raises:
        ConfigError: If ``dst`` already exists or ``src`` does not.
    """
    source = net.group(src)
    if net.has_group(dst):
        raise ConfigError(f"parameter group {dst!r} already exists")
    layers: list[Layer] = []
    for layer in source.layers:

        def copy(p: Parameter) -> Parameter:
            return Parameter(p.data.copy(), dst + p.name[len(src) :], dst, trainable=p.trainable)

        layers.append(
            Layer(
                kind=layer.kind,
                weight=copy(layer.weight),
                bias=copy(layer.bias),
                activation=layer.activation,
                slope=None if layer.slope is None else copy(layer.slope),
                pool_after=layer.pool_after,
            )
        )
    clone = ParameterGroup(dst, layers)
    net.groups[dst] = clone
    return clone


def add_group(
    net: SafeNetwork, name: str, seed: int = 0, dtype: type[np.floating] | None = None
) -> ParameterGroup:
    """Create a freshly initialized second-level group (``sm_encoder_2``/``sc_decoder_2``).

    Raises:
        ConfigError: If the group already exists or has no layer plan.
    """
    if net.has_group(name):
        raise ConfigError(f"parameter group {name!r} already exists")
    if dtype is None:
        dtype = net.group(SM_ENCODER).layers[0].weight.data.dtype.type
    group = _make_group(net.config, name, seed, dtype)
    net.groups[name] = group
    return group

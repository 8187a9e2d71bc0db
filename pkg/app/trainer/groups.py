"""Freezing, weight transfer and silencing of parameter groups."""

from collections.abc import Iterable

import numpy as np

from app.core.exceptions import ConfigError, TrainingError
from app.core.logging import get_logger
from app.safenet.network import ParameterGroup, SafeNetwork

logger = get_logger(__name__)


def _lookup(net: SafeNetwork, name: str) -> ParameterGroup:
    try:
        return net.group(name)
    except ConfigError as exc:
        raise TrainingError(str(exc)) from exc


def freeze_group(net: SafeNetwork, name: str) -> None:
    """Mark every parameter of ``name`` untrainable.

    Raises:
        TrainingError: If the group does not exist.
    """
    for p in _lookup(net, name).parameters():
        p.trainable = False


def unfreeze_group(net: SafeNetwork, name: str) -> None:
    for p in _lookup(net, name).parameters():
        p.trainable = True


def train_only(net: SafeNetwork, names: Iterable[str]) -> list[str]:
    """Freeze every group except ``names``; returns the trainable groups."""
    wanted = list(names)
    for name in wanted:
        _lookup(net, name)
    for name in net.groups:
        if name in wanted:
            unfreeze_group(net, name)
        else:
            freeze_group(net, name)
    return wanted


def trainable_groups(net: SafeNetwork) -> list[str]:
    return [
        name
        for name, group in net.groups.items()
        if any(p.trainable for p in group.parameters())
    ]


def transfer_group(net: SafeNetwork, src: str, dst: str) -> None:
    """Copy ``src``'s values into ``dst`` position by position.

    Raises:
        TrainingError: If a group is missing, the groups hold different
            numbers of parameters, or shapes differ at some position.
    """
    source = _lookup(net, src).parameters()
    target = _lookup(net, dst).parameters()
    if len(source) != len(target):
        raise TrainingError(
            f"cannot transfer {src} ({len(source)} parameters) into {dst} ({len(target)})"
        )
    for position, (a, b) in enumerate(zip(source, target, strict=True)):
        if a.shape != b.shape:
            raise TrainingError(
                f"transfer {src} -> {dst}: shape mismatch at position {position} "
                f"({a.name} {a.shape} vs {b.name} {b.shape})"
            )
    for a, b in zip(source, target, strict=True):
        np.copyto(b.data, a.data)
    logger.info("training.groups.transfer_completed", src=src, dst=dst, parameters=len(source))


def zero_final_layer(net: SafeNetwork, name: str) -> None:
    """Zero the weights and bias of the group's last layer.

    For a recovery decoder this makes the branch contribute an all-zero
    block, exactly like a branch that was not received.
    """
    last = _lookup(net, name).layers[-1]
    last.weight.data[...] = 0
    last.bias.data[...] = 0

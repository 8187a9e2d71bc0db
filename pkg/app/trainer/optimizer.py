"""Adam with per-group learning rates, and the early-stopping rule."""

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fnmatch import fnmatchcase

import numpy as np

from app.core.exceptions import TrainingError
from app.tensor.tensor import Array, Parameter

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First/second moments and step count per parameter name.

    State of a frozen parameter is kept as-is, so it resumes where it left
    off when the parameter is unfrozen.
    """

    m: dict[str, Array] = field(default_factory=dict)
    v: dict[str, Array] = field(default_factory=dict)
    t: dict[str, int] = field(default_factory=dict)


def resolve_lr(group: str, lr_map: Mapping[str, float]) -> float:
    """Learning rate of the first ``lr_map`` pattern matching ``group``.

    Raises:
        TrainingError: If no pattern matches.
    """
    for pattern, lr in lr_map.items():
        if fnmatchcase(group, pattern):
            return lr
    raise TrainingError(
        f"no learning rate for parameter group {group!r}; patterns: {list(lr_map)}"
    )


def adam_step(
    params: Iterable[Parameter], state: AdamState, lr_map: Mapping[str, float]
) -> None:
    """Apply one bias-corrected Adam update and clear gradients.

    Parameters that are frozen or received no gradient are left untouched.

    Raises:
        TrainingError: If a trainable parameter with a gradient has no
            matching learning rate.
    """
    for p in params:
        grad = p.grad
        p.grad = None
        if not p.trainable or grad is None:
            continue
        lr = resolve_lr(p.group, lr_map)
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None or v is None:
            m = np.zeros_like(p.data, dtype=np.float64)
            v = np.zeros_like(p.data, dtype=np.float64)
        t = state.t.get(p.name, 0) + 1
        m = BETA1 * m + (1.0 - BETA1) * grad
        v = BETA2 * v + (1.0 - BETA2) * np.square(grad, dtype=np.float64)
        m_hat = m / (1.0 - BETA1**t)
        v_hat = v / (1.0 - BETA2**t)
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + EPSILON)).astype(p.data.dtype)
        state.m[p.name], state.v[p.name], state.t[p.name] = m, v, t


class StopDecision(StrEnum):
    CONTINUE = "continue"
    STOP = "stop"


def early_stop_check(history: Sequence[float], patience: int) -> StopDecision:
    """Stop once the best loss is more than ``patience`` epochs old.

    Only a strictly lower loss counts as an improvement, so ties keep the
    earlier epoch as the best.
    """
    if not history:
        raise TrainingError("early_stop_check needs at least one validation loss")
    best = int(np.argmin(np.asarray(history, dtype=np.float64)))
    if len(history) - 1 - best > patience:
        return StopDecision.STOP
    return StopDecision.CONTINUE

"""Bandwidth ratio accounting and bandwidth-driven branch selection."""

from fractions import Fraction

from app.core.exceptions import ConfigError
from app.safenet.schemas import SafeConfig


def bandwidth_ratio(config: SafeConfig, index: int) -> Fraction:
    """Channel symbols per source dimension for branch ``index``.

    ``(H/8 * W/8 * d_i) / (H * W * 3)``; H and W cancel, so this is
    ``d_i / 192`` for RGB input.

    Raises:
        ConfigError: If ``index`` is not a branch of ``config``.
    """
    if not 0 <= index < config.num_branches:
        raise ConfigError(f"branch index {index} out of range 0..{config.num_branches - 1}")
    height, width = config.latent_hw
    symbols = height * width * config.branch_dims[index]
    return Fraction(symbols, config.height * config.width * config.input_channels)


def total_bandwidth_ratio(config: SafeConfig) -> Fraction:
    return sum((bandwidth_ratio(config, i) for i in range(config.num_branches)), Fraction(0))


def select_subset(config: SafeConfig, budget: Fraction | float | str) -> tuple[int, ...]:
    """Largest prefix ``(0, ..., k-1)`` of branches that fits the bandwidth budget.

    Args:
        config: Network configuration.
        budget: Available bandwidth ratio, e.g. ``Fraction(1, 12)`` or ``"1/24"``.

    Raises:
        ConfigError: If the budget cannot carry even branch 0.
    """
    try:
        available = Fraction(str(budget))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid bandwidth budget {budget!r}") from exc
    chosen: list[int] = []
    used = Fraction(0)
    for i in range(config.num_branches):
        used += bandwidth_ratio(config, i)
        if used > available:
            break
        chosen.append(i)
    if not chosen:
        raise ConfigError(
            f"bandwidth budget {available} is below branch 0's ratio "
            f"{bandwidth_ratio(config, 0)}"
        )
    return tuple(chosen)

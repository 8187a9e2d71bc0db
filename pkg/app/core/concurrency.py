"""Worker pool sizing and ordered parallel map for independent trials."""

import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

from app.core.config import get_settings
from app.core.logging import get_logger

logger = get_logger(__name__)


def resolve_workers(requested: int | None = None) -> int:
    """Resolve the number of evaluation workers.

    Args:
        requested: Explicit count; falls back to ``SAFE_THREADS`` when None.
            Zero means one worker per CPU.

    Returns:
        A positive worker count.
    """
    count = get_settings().safe_threads if requested is None else requested
    if count <= 0:
        count = os.cpu_count() or 1
    return count


def parallel_map[T, R](fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Apply ``fn`` to every item, preserving input order in the result.

    numpy releases the GIL inside its kernels, so threads give real overlap
    for the convolution-heavy trials this is used for.

    Args:
        fn: Pure function of one item.
        items: Work items.
        workers: Maximum concurrent workers.

    Returns:
        Results in the order of ``items``, independent of ``workers``.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("core.pool.map_started", items=len(items), workers=workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

"""Tests for worker sizing and the ordered parallel map."""

import os
from unittest.mock import patch

from app.core.concurrency import parallel_map, resolve_workers
from app.core.config import get_settings


def test_explicit_worker_count_wins() -> None:
    """Test a positive request is used as-is."""
    assert resolve_workers(3) == 3


def test_zero_means_cpu_count() -> None:
    """Test zero resolves to at least one worker."""
    assert resolve_workers(0) == (os.cpu_count() or 1)


def test_environment_sets_default() -> None:
    """Test SAFE_THREADS is used when no count is requested."""
    get_settings.cache_clear()
    try:
        with patch.dict(os.environ, {"SAFE_THREADS": "2"}):
            get_settings.cache_clear()
            assert resolve_workers() == 2
    finally:
        get_settings.cache_clear()


def test_parallel_map_preserves_order() -> None:
    """Test results follow input order for any worker count."""
    items = list(range(20))

    assert parallel_map(lambda x: x * x, items, 4) == [x * x for x in items]
    assert parallel_map(lambda x: x * x, items, 1) == [x * x for x in items]

"""Pytest fixtures for codec tests."""

import numpy as np
import pytest

from app.safenet.network import SafeNetwork, build
from app.safenet.schemas import SafeConfig
from app.tensor.tensor import Tensor


@pytest.fixture
def tiny_config() -> SafeConfig:
    """Two branches on 8x8 images with a 4-channel first layer."""
    return SafeConfig(branch_dims=(2, 2), base_width=4, height=8, width=8)


@pytest.fixture
def tiny_net(tiny_config: SafeConfig) -> SafeNetwork:
    """Freshly initialized float64 network for exact comparisons."""
    return build(tiny_config, seed=7, dtype=np.float64)


@pytest.fixture
def tiny_images(tiny_config: SafeConfig) -> Tensor:
    """Three random images in [0, 1]."""
    rng = np.random.default_rng(11)
    return Tensor(rng.uniform(0, 1, (3, *tiny_config.image_shape)), dtype=np.float64)

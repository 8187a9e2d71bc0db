"""Pytest fixtures for training tests."""

import pytest

from app.data.dataset import DatasetSplit, split
from app.data.synthetic import SyntheticSpec, synth_dataset
from app.safenet.schemas import SafeConfig


@pytest.fixture
def train_config() -> SafeConfig:
    """Two branches on 8x8 images with a 4-channel first layer."""
    return SafeConfig(branch_dims=(2, 2), base_width=4, height=8, width=8)


@pytest.fixture(scope="module")
def train_data() -> DatasetSplit:
    """Sixteen synthetic 8x8 images split 8 / 4 / 4."""
    images = synth_dataset(SyntheticSpec(count=16, height=8, width=8, seed=3, max_shapes=4))
    return split(images, fractions=(0.5, 0.25, 0.25), seed=1)


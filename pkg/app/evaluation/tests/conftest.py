"""Pytest fixtures for evaluation tests."""

import pytest

from app.data.dataset import ImageDataset
from app.data.synthetic import SyntheticSpec, synth_dataset
from app.evaluation.sweep import SweepRecord
from app.safenet.network import SafeNetwork, build
from app.safenet.schemas import SafeConfig


@pytest.fixture
def eval_config() -> SafeConfig:
    """Two branches on 8x8 images with a 4-channel first layer."""
    return SafeConfig(branch_dims=(2, 2), base_width=4, height=8, width=8)


@pytest.fixture
def eval_net(eval_config: SafeConfig) -> SafeNetwork:
    """Untrained network; evaluation only needs it to be deterministic."""
    return build(eval_config, seed=3)


@pytest.fixture
def eval_images() -> ImageDataset:
    """Five synthetic 8x8 images."""
    return synth_dataset(SyntheticSpec(count=5, height=8, width=8, seed=2, max_shapes=4))


@pytest.fixture
def records() -> list[SweepRecord]:
    """Records in scrambled order, one of them saturated."""
    return [
        SweepRecord(
            strategy=2, train_x=2, trans_y=2, channel="rayleigh", snr_db=5.0,
            mean_psnr_db=21.123456, std_psnr_db=0.5, trials=32,
        ),
        SweepRecord(
            strategy=2, train_x=1, trans_y=1, channel="awgn", snr_db=10.0,
            mean_psnr_db=19.87654, std_psnr_db=0.25, trials=32,
        ),
        SweepRecord(
            strategy=2, train_x=1, trans_y=1, channel="awgn", snr_db=0.0,
            mean_psnr_db=float("inf"), std_psnr_db=0.0, trials=32,
        ),
        SweepRecord(
            strategy=1, train_x=2, trans_y=2, channel="awgn", snr_db=20.0,
            mean_psnr_db=-1.5, std_psnr_db=0.00004, trials=32,
        ),
    ]

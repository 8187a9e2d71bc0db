"""Pytest fixtures for command-line tests.

Every fixture writes real files under ``tmp_path`` so the commands run
exactly as they do from a shell.
"""

from pathlib import Path

import pytest

from app.main import main

TINY_TRAINING = """\
# two-branch codec on 8x8 images, a couple of epochs
branch_dims = 2,2
base_width = 4
height = 8
width = 8
batch_size = 4
patience = 2
max_epochs = 2
seed = 3
stage_a_lr = 1e-3
lr_high = 1e-3
lr_low = 1e-4
train_fraction = 0.5
val_fraction = 0.25
test_fraction = 0.25
"""

TINY_SYNTHETIC = """\
count = 16
height = 8
width = 8
seed = 4
max_shapes = 4
"""


@pytest.fixture
def training_config(tmp_path: Path) -> Path:
    """Training config file for a miniature network."""
    path = tmp_path / "train.conf"
    path.write_text(TINY_TRAINING)
    return path


@pytest.fixture
def image_dir(tmp_path: Path) -> Path:
    """Sixteen synthetic 8x8 PPM images written by gen-data."""
    spec = tmp_path / "synthetic.conf"
    spec.write_text(TINY_SYNTHETIC)
    out = tmp_path / "images"
    assert main(["gen-data", "--spec", str(spec), "--out", str(out)]) == 0
    return out


@pytest.fixture
def trained_dir(tmp_path: Path, training_config: Path, image_dir: Path) -> Path:
    """Output directory of a Strategy 2 training run."""
    out = tmp_path / "run"
    code = main(
        [
            "train",
            "--strategy",
            "2",
            "--config",
            str(training_config),
            "--data",
            str(image_dir),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    return out

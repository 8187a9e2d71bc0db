"""In-memory image datasets, directory I/O and seeded splitting."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from app.core.exceptions import ConfigError, DataFormatError
from app.core.logging import get_logger
from app.data.ppm import list_ppm_files, load_ppm, save_ppm
from app.tensor.rng import make_rng
from app.tensor.tensor import Array, Tensor

logger = get_logger(__name__)

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class ImageDataset:
    """Immutable stack of RGB images ``[N, 3, H, W]`` with values in ``[0, 1]``.

    Attributes:
        images: Read-only float32 array.
        provenance: Where the images came from (synthetic spec or directory).
        labels: Optional per-image labels; carried but never used.
    """

    images: Array
    provenance: str = "memory"
    labels: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        images = np.array(self.images, dtype=np.float32)
        if images.ndim != 4 or images.shape[1] != 3:
            raise DataFormatError(f"dataset images must be [N, 3, H, W], got {images.shape}")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise DataFormatError(
                f"pixel values must lie in [0, 1], got [{images.min()}, {images.max()}]"
            )
        if self.labels is not None and len(self.labels) != images.shape[0]:
            raise DataFormatError(
                f"{len(self.labels)} labels for {images.shape[0]} images"
            )
        images.setflags(write=False)
        object.__setattr__(self, "images", images)

    @classmethod
    def from_samples(
        cls, samples: Sequence[Tensor | Array], provenance: str = "memory"
    ) -> "ImageDataset":
        """Stack ``[3, H, W]`` samples that share one size.

        Raises:
            DataFormatError: If the list is empty or sizes differ.
        """
        if not samples:
            raise DataFormatError("cannot infer image size from zero samples")
        arrays = [s.data if isinstance(s, Tensor) else np.asarray(s) for s in samples]
        shapes = {a.shape for a in arrays}
        if len(shapes) != 1:
            raise DataFormatError(f"samples differ in shape: {sorted(shapes)}")
        return cls(np.stack(arrays), provenance)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def image_shape(self) -> tuple[int, int, int]:
        _, c, h, w = self.images.shape
        return c, h, w

    def sample(self, index: int) -> Tensor:
        return Tensor(self.images[index])

    def batch(self, indices: Sequence[int] | Array | slice | None = None) -> Tensor:
        """Images at ``indices`` (all when None) as a ``[n, 3, H, W]`` tensor."""
        if indices is None:
            return Tensor(self.images)
        return Tensor(np.ascontiguousarray(self.images[indices]))

    def subset(self, indices: Sequence[int] | Array, tag: str) -> "ImageDataset":
        picked = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else tuple(self.labels[i] for i in picked)
        return ImageDataset(self.images[picked], f"{self.provenance}[{tag}]", labels)

    def mean_image(self) -> Array:
        """Per-pixel mean over the dataset, shape ``[3, H, W]``."""
        if not len(self):
            raise DataFormatError("mean image of an empty dataset is undefined")
        return self.images.mean(axis=0, dtype=np.float64).astype(np.float32)


class DatasetSplit(NamedTuple):
    train: ImageDataset
    val: ImageDataset
    test: ImageDataset


def split_sizes(count: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    """Train and validation sizes are floored; the test split takes the remainder.

    Raises:
        ConfigError: Unless there are three positive fractions summing to 1.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ConfigError(f"split needs three positive fractions, got {list(fractions)}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")
    train = math.floor(count * fractions[0] + 1e-9)
    val = math.floor(count * fractions[1] + 1e-9)
    return train, val, count - train - val


def split(
    dataset: ImageDataset,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> DatasetSplit:
    """Shuffle with ``seed`` and cut into disjoint train/val/test parts.

    Example:
        512 samples with (0.8, 0.1, 0.1) give 409 / 51 / 52.
    """
    n_train, n_val, _ = split_sizes(len(dataset), fractions)
    order = make_rng(seed, "split").permutation(len(dataset))
    parts = DatasetSplit(
        train=dataset.subset(order[:n_train], "train"),
        val=dataset.subset(order[n_train : n_train + n_val], "val"),
        test=dataset.subset(order[n_train + n_val :], "test"),
    )
    logger.info(
        "data.split.split_completed",
        train=len(parts.train),
        val=len(parts.val),
        test=len(parts.test),
        seed=seed,
    )
    return parts


def load_image_dir(directory: Path) -> ImageDataset:
    """Load every ``.ppm`` of a flat directory in lexicographic order.

    Raises:
        DataFormatError: If the directory holds no PPM files, a file is
            malformed, or sizes differ.
    """
    files = list_ppm_files(directory)
    if not files:
        raise DataFormatError(f"no .ppm files in {directory}")
    dataset = ImageDataset.from_samples([load_ppm(p) for p in files], str(directory))
    logger.info("data.directory.load_completed", directory=str(directory), count=len(dataset))
    return dataset


def save_image_dir(dataset: ImageDataset, directory: Path) -> list[Path]:
    """Write ``00000.ppm``, ``00001.ppm``, ... so listing order is sample order."""
    directory.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(max(len(dataset) - 1, 0))))
    paths = [
        save_ppm(dataset.images[i], directory / f"{i:0{width}d}.ppm") for i in range(len(dataset))
    ]
    logger.info("data.directory.save_completed", directory=str(directory), count=len(paths))
    return paths

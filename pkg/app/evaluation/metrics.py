"""Image quality metrics with a peak value of 1.0."""

import math

import numpy as np
from numpy.typing import NDArray

from app.core.exceptions import ShapeError
from app.data.dataset import ImageDataset
from app.tensor.tensor import Array, Tensor

PEAK = 1.0
SATURATED = math.inf


def _values(x: Tensor | Array) -> NDArray[np.float64]:
    data = x.data if isinstance(x, Tensor) else x
    return np.asarray(data, dtype=np.float64)


def _pair(ref: Tensor | Array, test: Tensor | Array) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    a, b = _values(ref), _values(test)
    if a.shape != b.shape:
        raise ShapeError(f"psnr needs equal shapes, got {a.shape} and {b.shape}")
    return a, b


def _from_mse(mse: float) -> float:
    if mse == 0.0:
        return SATURATED
    return float(10.0 * np.log10(PEAK * PEAK / mse))


def psnr(ref: Tensor | Array, test: Tensor | Array) -> float:
    """Peak signal-to-noise ratio in dB over all elements.

    Returns ``math.inf`` for identical inputs.

    Raises:
        ShapeError: If the shapes differ.

    Example:
        psnr(np.zeros(4), np.full(4, 0.1))  # 20.0
    """
    a, b = _pair(ref, test)
    return _from_mse(float(np.mean(np.square(a - b))))


def psnr_per_image(ref: Tensor | Array, test: Tensor | Array) -> NDArray[np.float64]:
    """PSNR of every image of an ``[N, ...]`` batch."""
    a, b = _pair(ref, test)
    if a.ndim < 2:
        raise ShapeError(f"psnr_per_image needs a batch axis, got shape {a.shape}")
    mse = np.mean(np.square(a - b).reshape(a.shape[0], -1), axis=1)
    return np.array([_from_mse(float(m)) for m in mse], dtype=np.float64)


def baseline_psnr(train: ImageDataset, test: ImageDataset) -> float:
    """Mean PSNR of predicting the training set's per-pixel mean for every test image.

    Raises:
        ShapeError: If the two sets hold images of different sizes or the
            test set is empty.
    """
    if train.image_shape != test.image_shape:
        raise ShapeError(
            f"train images are {train.image_shape} but test images are {test.image_shape}"
        )
    if not len(test):
        raise ShapeError("baseline_psnr needs at least one test image")
    prediction = np.broadcast_to(train.mean_image(), test.images.shape)
    return float(np.mean(psnr_per_image(test.images, prediction)))

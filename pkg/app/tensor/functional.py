"""Differentiable operations: the layer set of the multi-branch codec.

Convolutions gather sliding windows with ``sliding_window_view`` and contract
them with ``tensordot`` (im2col without an explicit column buffer). Their
backward passes scatter kernel-tap contributions back with strided slices.
"""

from collections.abc import Sequence

import numpy as np

from app.core.exceptions import ShapeError
from app.tensor.tensor import Array, Tensor


def _check_ndim(x: Tensor, ndim: int, what: str) -> None:
    if x.data.ndim != ndim:
        raise ShapeError(f"{what} must be {ndim}-D, got shape {x.shape}")


def _pad_hw(x: Array, padding: int) -> Array:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial output size of a convolution: ``floor((n + 2p - k) / s) + 1``."""
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(
    x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0
) -> Tensor:
    """2-D cross-correlation over ``[N, Cin, H, W]`` with ``[Cout, Cin, kh, kw]`` kernels.

    Raises:
        ShapeError: On channel mismatch, non-positive stride, or when the
            padded input admits no kernel placement.
    """
    _check_ndim(x, 4, "conv2d input")
    _check_ndim(weight, 4, "conv2d weight")
    if stride <= 0:
        raise ShapeError(f"conv2d stride must be positive, got {stride}")
    if padding < 0:
        raise ShapeError(f"conv2d padding must be non-negative, got {padding}")
    n, cin, h, w = x.shape
    cout, wcin, kh, kw = weight.shape
    if cin != wcin:
        raise ShapeError(
            f"conv2d channel mismatch: input shape {x.shape} vs weight shape {weight.shape}"
        )
    if bias.shape != (cout,):
        raise ShapeError(f"conv2d bias shape {bias.shape} does not match Cout={cout}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ShapeError(
            f"conv2d input {x.shape} with padding {padding} is smaller than kernel {(kh, kw)}"
        )
    ho = conv_output_size(h, kh, stride, padding)
    wo = conv_output_size(w, kw, stride, padding)

    xp = _pad_hw(x.data, padding)
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride][:, :, :ho, :wo]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3]))
    out = out.transpose(0, 3, 1, 2) + bias.data.reshape(1, cout, 1, 1)

    def backward(grad: Array) -> tuple[Array, Array, Array]:
        grad_w = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_xp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                tap = np.tensordot(grad, weight.data[:, :, i, j], axes=([1], [0]))
                grad_xp[
                    :, :, i : i + stride * ho : stride, j : j + stride * wo : stride
                ] += tap.transpose(0, 3, 1, 2)
        grad_x = grad_xp[:, :, padding : padding + h, padding : padding + w]
        return grad_x, grad_w, grad_b

    return Tensor.from_op(
        np.ascontiguousarray(out, dtype=x.dtype), (x, weight, bias), backward, "conv2d"
    )


def conv_transpose2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor,
    stride: int = 2,
    padding: int = 1,
    output_padding: int = 1,
) -> Tensor:
    """Transposed convolution with ``[Cin, Cout, kh, kw]`` kernels.

    Output size is ``(n - 1) * stride - 2 * padding + k + output_padding``;
    the defaults (stride 2, kernel 3, padding 1, output_padding 1) double the
    spatial size exactly.

    Raises:
        ShapeError: On channel mismatch, invalid stride/padding, or a
            non-positive output size.
    """
    _check_ndim(x, 4, "conv_transpose2d input")
    _check_ndim(weight, 4, "conv_transpose2d weight")
    if stride <= 0:
        raise ShapeError(f"conv_transpose2d stride must be positive, got {stride}")
    if padding < 0 or not 0 <= output_padding < max(stride, 1):
        raise ShapeError(
            f"conv_transpose2d needs padding >= 0 and 0 <= output_padding < stride, "
            f"got padding={padding}, output_padding={output_padding}, stride={stride}"
        )
    n, cin, h, w = x.shape
    wcin, cout, kh, kw = weight.shape
    if cin != wcin:
        raise ShapeError(
            f"conv_transpose2d channel mismatch: input shape {x.shape} vs weight shape {weight.shape}"
        )
    if bias.shape != (cout,):
        raise ShapeError(f"conv_transpose2d bias shape {bias.shape} does not match Cout={cout}")
    ho = (h - 1) * stride - 2 * padding + kh + output_padding
    wo = (w - 1) * stride - 2 * padding + kw + output_padding
    if ho <= 0 or wo <= 0:
        raise ShapeError(
            f"conv_transpose2d output size {(ho, wo)} is not positive for input {x.shape}"
        )
    full_h = (h - 1) * stride + kh + output_padding
    full_w = (w - 1) * stride + kw + output_padding

    full = np.zeros((n, cout, full_h, full_w), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            tap = np.tensordot(x.data, weight.data[:, :, i, j], axes=([1], [0]))
            full[:, :, i : i + stride * h : stride, j : j + stride * w : stride] += tap.transpose(
                0, 3, 1, 2
            )
    out = full[:, :, padding : padding + ho, padding : padding + wo] + bias.data.reshape(
        1, cout, 1, 1
    )

    def backward(grad: Array) -> tuple[Array, Array, Array]:
        grad_full = np.zeros((n, cout, full_h, full_w), dtype=grad.dtype)
        grad_full[:, :, padding : padding + ho, padding : padding + wo] = grad
        grad_x = np.zeros_like(x.data)
        grad_w = np.zeros_like(weight.data)
        for i in range(kh):
            for j in range(kw):
                window = grad_full[:, :, i : i + stride * h : stride, j : j + stride * w : stride]
                grad_x += np.tensordot(window, weight.data[:, :, i, j], axes=([1], [1])).transpose(
                    0, 3, 1, 2
                )
                grad_w[:, :, i, j] = np.tensordot(x.data, window, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        return grad_x, grad_w, grad_b

    return Tensor.from_op(
        np.ascontiguousarray(out, dtype=x.dtype), (x, weight, bias), backward, "conv_transpose2d"
    )


def maxpool2d(x: Tensor) -> Tensor:
    """2×2 max pooling with stride 2.

    Gradient goes to the first maximum of each window in row-major order.

    Raises:
        ShapeError: If the input is not 4-D or has an odd height or width.
    """
    _check_ndim(x, 4, "maxpool2d input")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2d needs even height and width, got shape {x.shape}")
    windows = (
        x.data.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )
    arg = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]

    def backward(grad: Array) -> tuple[Array]:
        routed = np.zeros((n, c, h // 2, w // 2, 4), dtype=grad.dtype)
        np.put_along_axis(routed, arg[..., None], grad[..., None], axis=-1)
        grad_x = (
            routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        )
        return (grad_x,)

    return Tensor.from_op(np.ascontiguousarray(out), (x,), backward, "maxpool2d")


def relu(x: Tensor) -> Tensor:
    """Elementwise ``max(x, 0)``."""
    positive = x.data > 0
    out = np.where(positive, x.data, 0).astype(x.dtype, copy=False)

    def backward(grad: Array) -> tuple[Array]:
        return (grad * positive,)

    return Tensor.from_op(out, (x,), backward, "relu")


def prelu(x: Tensor, slope: Tensor) -> Tensor:
    """Elementwise ``x if x >= 0 else slope * x`` with a learnable scalar slope."""
    if slope.data.size != 1:
        raise ShapeError(f"prelu slope must be a scalar, got shape {slope.shape}")
    a = slope.data.reshape(())
    nonneg = x.data >= 0
    out = np.where(nonneg, x.data, a * x.data).astype(x.dtype, copy=False)

    def backward(grad: Array) -> tuple[Array, Array]:
        grad_x = np.where(nonneg, grad, a * grad)
        grad_a = np.asarray(np.sum(np.where(nonneg, 0, x.data) * grad)).reshape(slope.shape)
        return grad_x, grad_a.astype(slope.dtype)

    return Tensor.from_op(out, (x, slope), backward, "prelu")


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    out = a.data * b.data

    def backward(grad: Array) -> tuple[Array, Array]:
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)

    return Tensor.from_op(out, (a, b), backward, "mul")


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add_constant(x: Tensor, constant: Array, op: str = "add_constant") -> Tensor:
    """Add a non-differentiable array; the gradient w.r.t. ``x`` is the identity."""
    if constant.shape != x.data.shape:
        raise ShapeError(f"constant shape {constant.shape} does not match {x.shape}")
    out = (x.data + constant).astype(x.dtype, copy=False)

    def backward(grad: Array) -> tuple[Array]:
        return (grad,)

    return Tensor.from_op(out, (x,), backward, op)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean of squared differences over every element (pixels, channels, batch).

    Raises:
        ShapeError: If the shapes differ.
    """
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss shape mismatch: pred {pred.shape} vs target {target.shape}")
    diff = pred.data - target.data
    count = diff.size
    out = np.asarray(np.mean(np.square(diff)), dtype=pred.dtype)

    def backward(grad: Array) -> tuple[Array, Array]:
        g = (2.0 / count) * grad * diff
        return g, -g

    return Tensor.from_op(out, (pred, target), backward, "mse_loss")


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along ``axis`` (channels by default)."""
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([0, *sizes])

    def backward(grad: Array) -> list[Array]:
        return [
            np.take(grad, np.arange(start, stop), axis=axis)
            for start, stop in zip(bounds[:-1], bounds[1:], strict=True)
        ]

    return Tensor.from_op(out, tuple(tensors), backward, "concat")


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    """Take channels ``[start, stop)`` of a 4-D tensor."""
    _check_ndim(x, 4, "slice_channels input")
    channels = x.shape[1]
    if not 0 <= start < stop <= channels:
        raise ShapeError(f"channel slice [{start}, {stop}) is outside 0..{channels}")
    out = np.ascontiguousarray(x.data[:, start:stop])

    def backward(grad: Array) -> tuple[Array]:
        full = np.zeros_like(x.data)
        full[:, start:stop] = grad
        return (full,)

    return Tensor.from_op(out, (x,), backward, "slice_channels")


def clamp(x: Tensor, low: float = 0.0, high: float = 1.0) -> Tensor:
    """Clip values into ``[low, high]``; gradient passes where unclipped."""
    inside = (x.data >= low) & (x.data <= high)
    out = np.clip(x.data, low, high)

    def backward(grad: Array) -> tuple[Array]:
        return (grad * inside,)

    return Tensor.from_op(out, (x,), backward, "clamp")

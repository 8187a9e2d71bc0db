"""Reverse-mode autodiff tensor and trainable parameter types.

A ``Tensor`` wraps a numpy array. Operations in ``app.tensor.functional``
produce new tensors that remember their parents and a closure mapping the
output gradient to parent gradients. ``backward`` walks that graph in reverse
topological order and accumulates gradients into leaf tensors that require
them.

Tensors produced by operations are treated as immutable; only ``grad``
buffers and ``Parameter.data`` (through the optimizer) change after creation.
"""

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.exceptions import ShapeError

type Array = NDArray[np.floating]
type BackwardFn = Callable[[Array], Sequence[Array | None]]

DEFAULT_DTYPE = np.float32

_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph construction inside the block (evaluation mode)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    """Return whether operations currently record the autodiff graph."""
    return _grad_enabled.get()


class Tensor:
    """N-dimensional array participating in a reverse-mode graph.

    Attributes:
        data: Contiguous floating-point values.
        grad: Same-shape gradient buffer, ``None`` until accumulated.
        requires_grad: Whether gradients flow into this tensor.
    """

    __slots__ = ("_backward", "_parents", "data", "grad", "op", "requires_grad")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: type[np.floating] | None = None,
    ) -> None:
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(DEFAULT_DTYPE)
        self.data: Array = np.ascontiguousarray(array)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self.op = "leaf"
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None

    @classmethod
    def from_op(
        cls,
        data: Array,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Create the output of an operation, wiring it into the graph.

        The graph edge is only recorded when gradients are enabled and at
        least one parent requires them.
        """
        out = cls(data)
        if is_grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        out.op = op
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def dtype(self) -> np.dtype[np.floating]:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        """Return the value of a single-element tensor as a Python float."""
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> Array:
        """Return the underlying array (no copy)."""
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        Raises:
            ShapeError: If this tensor is not a scalar.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() requires a scalar loss, got shape {self.shape}")
        backpropagate(self, np.ones_like(self.data))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op!r})"


class Parameter(Tensor):
    """A named, optionally trainable leaf tensor belonging to a parameter group.

    ``requires_grad`` mirrors ``trainable``: a frozen parameter never
    accumulates gradient and the optimizer leaves it untouched.
    """

    __slots__ = ("group", "name")

    def __init__(self, data: ArrayLike, name: str, group: str, trainable: bool = True) -> None:
        super().__init__(data, requires_grad=trainable)
        if not name.startswith(f"{group}."):
            raise ValueError(f"parameter name {name!r} must be prefixed by group {group!r}")
        self.name = name
        self.group = group

    @property
    def trainable(self) -> bool:
        return self.requires_grad

    @trainable.setter
    def trainable(self, value: bool) -> None:
        self.requires_grad = value
        if not value:
            self.grad = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backpropagate(root: Tensor, seed: Array) -> None:
    """Propagate ``seed`` (d loss / d root) back through the graph.

    Intermediate gradients live only for the duration of the call; leaves
    that require gradients accumulate additively into ``grad``.
    """
    if not root.requires_grad:
        return
    if seed.shape != root.data.shape:
        raise ShapeError(f"seed gradient shape {seed.shape} does not match {root.shape}")
    grads: dict[int, Array] = {id(root): seed.astype(root.dtype, copy=False)}
    for node in reversed(_topological_order(root)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad), strict=True):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = parent_grad if key not in grads else grads[key] + parent_grad

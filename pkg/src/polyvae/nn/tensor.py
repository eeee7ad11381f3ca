"""Dense float64 tensors with reverse-mode automatic differentiation.

A Tensor wraps a numpy array and, when produced by a recorded operation,
remembers its parents and a vector-Jacobian product closure. backward()
walks the tape in reverse topological order and accumulates gradients
into the ``grad`` buffers of every tensor that requires them. Gradients
are summed across repeated backward calls until explicitly zeroed.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


grad_enabled = True


class no_grad:
    """Context manager disabling tape recording (pure forward evaluation)."""

    def __enter__(self) -> None:
        global grad_enabled
        self._prev = grad_enabled
        grad_enabled = False

    def __exit__(self, *_exc) -> None:
        global grad_enabled
        grad_enabled = self._prev


class ShapeMismatch(ValueError):
    """Raised when operand shapes are incompatible for an operation."""

    def __init__(self, op: str, *shapes: tuple) -> None:
        super().__init__(f"{op}: incompatible shapes {', '.join(map(str, shapes))}")
        self.op = op
        self.shapes = shapes


class NotScalar(ValueError):
    """Raised when backward() is called on a non-scalar tensor."""


class Tensor:
    """A node in the computation graph.

    ``data`` is always a float64 ndarray. ``grad`` is allocated lazily on
    first accumulation and matches ``data`` in shape.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None,
    ) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._vjp = _vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


class Parameter(Tensor):
    """A named leaf tensor with optimizer moment buffers."""

    __slots__ = ("name", "m", "v")

    def __init__(self, name: str, data) -> None:
        super().__init__(data, requires_grad=True)
        self.name = name
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _topo_order(root: Tensor) -> list[Tensor]:
    """Iterative post-order DFS over the tape (graphs can be deep)."""
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
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into t.grad for every reachable tensor.

    Repeated calls without zero_grad() sum gradients.
    """
    if loss.size != 1:
        raise NotScalar(f"backward() needs a scalar, got shape {loss.shape}")
    order = _topo_order(loss)
    loss.accumulate_grad(np.ones_like(loss.data))
    for node in reversed(order):
        if node._vjp is None or node.grad is None:
            continue
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not parent.requires_grad:
                continue
            parent.accumulate_grad(g)
        # Intermediate grads are not needed once propagated; leaves keep theirs.
        if node._parents:
            node.grad = None


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()

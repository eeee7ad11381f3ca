"""Differentiable operations over Tensors.

Every op computes its forward value with numpy (or the compiled kernels)
and, when any operand requires gradients, records a closure computing the
vector-Jacobian products for its parents.
"""

from __future__ import annotations

import numpy as np

from . import kernels, tensor as _tensor
from .tensor import ShapeMismatch, Tensor


def _make(data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    if _tensor.grad_enabled and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _vjp=vjp)
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g down to `shape` (inverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (got, want) in enumerate(zip(g.shape, shape)) if want == 1 and got != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / arithmetic
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeMismatch("add", a.shape, b.shape) from None
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data - b.data
    except ValueError:
        raise ShapeMismatch("sub", a.shape, b.shape) from None
    return _make(data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeMismatch("mul", a.shape, b.shape) from None
    return _make(
        data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def scale(a: Tensor, c: float) -> Tensor:
    return _make(a.data * c, (a,), lambda g: (g * c,))


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def log(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)
    return _make(data, (a,), lambda g: (g * data,))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    data = np.clip(a.data, lo, hi)
    return _make(data, (a,), lambda g: (g * ((a.data >= lo) & (a.data <= hi)),))


def relu(a: Tensor) -> Tensor:
    # subgradient 0.5 at exactly 0: binary inputs put whole activation
    # planes on the kink, and the midpoint matches central differences
    def vjp(g):
        return (g * ((a.data > 0.0) + 0.5 * (a.data == 0.0)),)

    return _make(np.maximum(a.data, 0.0), (a,), vjp)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    data = np.empty_like(x)
    pos = x >= 0
    data[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    data[~pos] = ex / (1.0 + ex)
    return _make(data, (a,), lambda g: (g * data * (1.0 - data),))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * data).sum(axis=axis, keepdims=True)
        return ((g - inner) * data,)

    return _make(data, (a,), vjp)


# ---------------------------------------------------------------------------
# reductions / shaping
# ---------------------------------------------------------------------------

def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(data, (a,), vjp)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.size if axis is None else a.shape[axis]
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(a: Tensor, shape) -> Tensor:
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        slicer = [slice(None)] * g.ndim
        outs = []
        for i in range(len(tensors)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            outs.append(g[tuple(slicer)])
        return tuple(outs)

    return _make(data, tuple(tensors), vjp)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    slicer = [slice(None)] * a.ndim
    slicer[axis] = slice(start, start + length)
    slicer = tuple(slicer)

    def vjp(g):
        out = np.zeros(a.shape, dtype=np.float64)
        out[slicer] = g
        return (out,)

    return _make(a.data[slicer].copy(), (a,), vjp)


# ---------------------------------------------------------------------------
# linear algebra / gather-scatter
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch("matmul", a.shape, b.shape)
    return _make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x (n, in) @ w (out, in)^T + b (out,)."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch("linear", x.shape, w.shape)
    data = x.data @ w.data.T
    if b is not None:
        if b.shape != (w.shape[0],):
            raise ShapeMismatch("linear bias", b.shape, w.shape)
        data = data + b.data

    def vjp(g):
        grads = [g @ w.data, g.T @ x.data]
        if b is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    parents = (x, w) if b is None else (x, w, b)
    return _make(data, parents, vjp)


def _to2d(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x.reshape(x.shape[0], -1))


def embed(table: Tensor, indices: np.ndarray) -> Tensor:
    """Row lookup: out[..., :] = table[indices[...]]."""
    if table.ndim != 2:
        raise ShapeMismatch("embed", table.shape)
    idx = np.ascontiguousarray(np.asarray(indices, dtype=np.int64).ravel())
    data = kernels.gather_rows(np.ascontiguousarray(table.data), idx)
    out_shape = tuple(np.shape(indices)) + (table.shape[1],)

    def vjp(g):
        gt = np.zeros(table.shape, dtype=np.float64)
        kernels.scatter_add_rows(gt, idx, _to2d(g.reshape(-1, table.shape[1])))
        return (gt,)

    return _make(data.reshape(out_shape), (table,), vjp)


def take_rows(x: Tensor, indices: np.ndarray) -> Tensor:
    """out[e] = x[indices[e]] along axis 0, trailing shape preserved."""
    idx = np.ascontiguousarray(np.asarray(indices, dtype=np.int64))
    trailing = x.shape[1:]
    data = kernels.gather_rows(_to2d(x.data), idx).reshape((len(idx),) + trailing)

    def vjp(g):
        gx = np.zeros((x.shape[0], int(np.prod(trailing, dtype=np.int64))), dtype=np.float64)
        kernels.scatter_add_rows(gx, idx, _to2d(g))
        return (gx.reshape(x.shape),)

    return _make(data, (x,), vjp)


def scatter_rows(src: Tensor, indices: np.ndarray, n_rows: int) -> Tensor:
    """out[r] = sum of src rows e with indices[e] == r; shape (n_rows, *src.shape[1:])."""
    idx = np.ascontiguousarray(np.asarray(indices, dtype=np.int64))
    trailing = src.shape[1:]
    flat = np.zeros((n_rows, int(np.prod(trailing, dtype=np.int64))), dtype=np.float64)
    kernels.scatter_add_rows(flat, idx, _to2d(src.data))

    def vjp(g):
        return (kernels.gather_rows(_to2d(g), idx).reshape(src.shape),)

    return _make(flat.reshape((n_rows,) + trailing), (src,), vjp)


# ---------------------------------------------------------------------------
# convolution / pooling / upsampling
# ---------------------------------------------------------------------------

def conv2d(x: Tensor, k: Tensor, b: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    if x.ndim != 4 or k.ndim != 4 or x.shape[1] != k.shape[1]:
        raise ShapeMismatch("conv2d", x.shape, k.shape)
    xd = np.ascontiguousarray(x.data)
    kd = np.ascontiguousarray(k.data)
    data = kernels.conv2d_forward(xd, kd, b.data, stride, pad)

    def vjp(g):
        return kernels.conv2d_backward(xd, kd, np.ascontiguousarray(g), stride, pad)

    return _make(data, (x, k, b), vjp)


def maxpool2d(x: Tensor, window: int) -> Tensor:
    if x.ndim != 4 or x.shape[2] % window or x.shape[3] % window:
        raise ShapeMismatch(f"maxpool2d window={window}", x.shape)
    xd = np.ascontiguousarray(x.data)
    data = kernels.maxpool2d_forward(xd, window)

    def vjp(g):
        return (kernels.maxpool2d_backward(xd, data, np.ascontiguousarray(g), window),)

    return _make(data, (x,), vjp)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    if x.ndim != 4:
        raise ShapeMismatch("upsample_nearest", x.shape)
    data = x.data.repeat(factor, axis=2).repeat(factor, axis=3)
    b, c, h, w = x.shape

    def vjp(g):
        return (g.reshape(b, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return _make(data, (x,), vjp)


# ---------------------------------------------------------------------------
# batch normalization
# ---------------------------------------------------------------------------

class BatchNormState:
    """Running statistics buffer for one batchnorm site."""

    __slots__ = ("mean", "var")

    def __init__(self, channels: int) -> None:
        self.mean = np.zeros(channels, dtype=np.float64)
        self.var = np.ones(channels, dtype=np.float64)


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
    update_stats: bool = True,
) -> Tensor:
    """Normalize per channel: axis 0 for 2-D input, axes (0,2,3) for 4-D.

    Training mode normalizes with (biased) batch statistics and updates the
    running buffers; eval mode applies the running statistics.
    """
    if x.ndim == 2:
        axes: tuple[int, ...] = (0,)
        def shape_c(v):
            return v
    elif x.ndim == 4:
        axes = (0, 2, 3)
        def shape_c(v):
            return v[None, :, None, None]
    else:
        raise ShapeMismatch("batchnorm", x.shape)
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeMismatch("batchnorm affine", x.shape, gamma.shape, beta.shape)

    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if update_stats:
            state.mean += momentum * (mu - state.mean)
            state.var += momentum * (var - state.var)
    else:
        mu, var = state.mean, state.var

    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - shape_c(mu)) * shape_c(inv)
    data = xhat * shape_c(gamma.data) + shape_c(beta.data)
    n = x.size // channels

    def vjp(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * shape_c(gamma.data)
        if training:
            # standard full-batch backward through mean/var
            s1 = dxhat.sum(axis=axes)
            s2 = (dxhat * xhat).sum(axis=axes)
            dx = (dxhat - shape_c(s1 / n) - xhat * shape_c(s2 / n)) * shape_c(inv)
        else:
            dx = dxhat * shape_c(inv)
        return dx, dgamma, dbeta

    return _make(data, (x, gamma, beta), vjp)

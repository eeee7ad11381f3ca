"""Pure numpy implementations of the hot kernels.

Same contracts as the compiled ``_fast`` extension; used as the fallback
backend when the extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Return patches of shape (B, C, kh, kw, Ho, Wo)."""
    b, c, h, w = x.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = np.empty((b, c, kh, kw, ho, wo), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride]
    return cols


def conv2d_forward(x: np.ndarray, k: np.ndarray, bias: np.ndarray, stride: int, pad: int) -> np.ndarray:
    cols = _im2col(x, k.shape[2], k.shape[3], stride, pad)
    y = np.einsum("bcijhw,ocij->bohw", cols, k, optimize=True)
    return y + bias[None, :, None, None]


def conv2d_backward(
    x: np.ndarray, k: np.ndarray, gy: np.ndarray, stride: int, pad: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    b, c, h, w = x.shape
    _, _, kh, kw = k.shape
    ho, wo = gy.shape[2], gy.shape[3]
    cols = _im2col(x, kh, kw, stride, pad)
    gk = np.einsum("bcijhw,bohw->ocij", cols, gy, optimize=True)
    gb = gy.sum(axis=(0, 2, 3))
    gxp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            patch = np.einsum("bohw,oc->bchw", gy, k[:, :, i, j], optimize=True)
            gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += patch
    gx = gxp[:, :, pad : pad + h, pad : pad + w] if pad else gxp
    return gx, gk, gb


def _pool_blocks(x: np.ndarray, window: int) -> np.ndarray:
    """(B, C, H, W) -> (B, C, Ho, Wo, window*window)."""
    b, c, h, w = x.shape
    ho, wo = h // window, w // window
    return (
        x.reshape(b, c, ho, window, wo, window)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, ho, wo, window * window)
    )


def maxpool2d_forward(x: np.ndarray, window: int) -> np.ndarray:
    return _pool_blocks(x, window).max(axis=-1)


def maxpool2d_backward(x: np.ndarray, y: np.ndarray, gy: np.ndarray, window: int) -> np.ndarray:
    """Gradient splits equally among entries tied for the window maximum
    (keeps analytic gradients consistent with central differences at exact
    ties, which binary inputs produce routinely)."""
    b, c, h, w = x.shape
    blocks = _pool_blocks(x, window)
    mask = blocks == y[..., None]
    share = (gy / mask.sum(axis=-1))[..., None] * mask
    ho, wo = h // window, w // window
    return (
        share.reshape(b, c, ho, wo, window, window)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, h, w)
    )


def scatter_add_rows(out: np.ndarray, idx: np.ndarray, src: np.ndarray) -> None:
    """out[idx[e]] += src[e] for each row e, in index order, in place."""
    np.add.at(out, idx, src)


def gather_rows(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return x[idx]

"""Kernel backend selection.

The hot inner loops (2-D convolution, max pooling, row scatter/gather for
graph message passing) exist twice: a compiled Cython extension
(``_fast``) and a pure numpy fallback (``_pure``). The backend is chosen
once at import time; set POLYVAE_KERNELS=pure|fast to force one
(``fast`` raises if the extension is missing), default is ``auto``.

Kernel contracts (both backends, verified against each other in tests):

- conv2d_forward(x, k, bias, stride, pad) -> y
- conv2d_backward(x, k, gy, stride, pad) -> (gx, gk, gb)
- maxpool2d_forward(x, window) -> y
- maxpool2d_backward(x, y, gy, window) -> gx    # ties share the gradient
- scatter_add_rows(out, idx, src)               # in place, 2-D float64
- gather_rows(x, idx) -> x[idx]                 # 2-D float64
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pure


def _load_fast() -> ModuleType | None:
    try:
        from . import _fast  # type: ignore[attr-defined]

        return _fast
    except ImportError:
        return None


def get_backend(name: str) -> ModuleType:
    """Return a kernel module by name ('pure' or 'fast')."""
    if name == "pure":
        return _pure
    if name == "fast":
        fast = _load_fast()
        if fast is None:
            raise ImportError("polyvae fast kernels extension is not built")
        return fast
    raise ValueError(f"unknown kernel backend {name!r}")


_requested = os.environ.get("POLYVAE_KERNELS", "auto")
if _requested == "auto":
    _impl = _load_fast() or _pure
else:
    _impl = get_backend(_requested)

BACKEND = "fast" if _impl is not _pure else "pure"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2d_forward = _impl.maxpool2d_forward
maxpool2d_backward = _impl.maxpool2d_backward
scatter_add_rows = _impl.scatter_add_rows
gather_rows = _impl.gather_rows

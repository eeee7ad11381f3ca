"""Adam optimizer and the named-tensor checkpoint format.

Checkpoint layout: magic, 8-byte little-endian manifest length, a JSON
manifest ({"meta": ..., "tensors": [{"name", "shape"}, ...]}), then the
raw float64 little-endian buffers concatenated in manifest order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .tensor import Parameter

_MAGIC = b"PVCK1\n"


class Adam:
    """Adam with bias correction; moment buffers live on the parameters."""

    def __init__(
        self,
        params: list[Parameter],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for p in self.params:
            if p.grad is None:
                continue
            if p.m is None:
                p.m = np.zeros_like(p.data)
                p.v = np.zeros_like(p.data)
            p.m += (1.0 - b1) * (p.grad - p.m)
            p.v += (1.0 - b2) * (p.grad * p.grad - p.v)
            p.data -= lr * (p.m / bc1) / (np.sqrt(p.v / bc2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    names = sorted(tensors)
    manifest = {
        "meta": meta,
        "tensors": [{"name": n, "shape": list(tensors[n].shape)} for n in names],
    }
    blob = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a polyvae checkpoint")
        (length,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(length).decode("utf-8"))
        tensors: dict[str, np.ndarray] = {}
        for entry in manifest["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated tensor data for {entry['name']}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return tensors, manifest["meta"]

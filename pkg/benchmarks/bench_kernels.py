#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy fallback.

Times the individual hot kernels on model-realistic shapes plus one full
training step driven through each backend.

Usage: python benchmarks/bench_kernels.py [--repeats 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from polyvae import graph as G
from polyvae import training as T
from polyvae.model import GraphBatch, Model, ModelConfig
from polyvae.nn import Adam, kernels, zero_grads

KERNEL_NAMES = (
    "conv2d_forward", "conv2d_backward", "maxpool2d_forward",
    "maxpool2d_backward", "scatter_add_rows", "gather_rows",
)


def timeit(fn, repeats: int) -> float:
    fn()
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats * 1e6  # us


def bench_kernels(backend, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    out: dict[str, float] = {}

    # conv shapes from the structure encoder/decoder at batch 64 x 2 bars
    x1 = rng.normal(size=(128, 1, 4, 32))
    k1 = rng.normal(size=(16, 1, 3, 3))
    x2 = rng.normal(size=(128, 16, 2, 16))
    k2 = rng.normal(size=(32, 16, 3, 3))
    y1 = backend.conv2d_forward(x1, k1, np.zeros(16), 1, 1)
    y2 = backend.conv2d_forward(x2, k2, np.zeros(32), 1, 1)
    out["conv2d fwd 1->16ch"] = timeit(lambda: backend.conv2d_forward(x1, k1, np.zeros(16), 1, 1), repeats)
    out["conv2d fwd 16->32ch"] = timeit(lambda: backend.conv2d_forward(x2, k2, np.zeros(32), 1, 1), repeats)
    g2 = rng.normal(size=y2.shape)
    out["conv2d bwd 16->32ch"] = timeit(lambda: backend.conv2d_backward(x2, k2, g2, 1, 1), repeats)

    yp = backend.maxpool2d_forward(x2, 2)
    gp = rng.normal(size=yp.shape)
    out["maxpool fwd"] = timeit(lambda: backend.maxpool2d_forward(x2, 2), repeats)
    out["maxpool bwd"] = timeit(lambda: backend.maxpool2d_backward(x2, yp, gp, 2), repeats)

    # message passing shapes: 4000 edges into 800 nodes at d=512
    h = rng.normal(size=(800, 512))
    idx = rng.integers(0, 800, size=4000)
    src = rng.normal(size=(4000, 512))
    out["gather 4k rows d=512"] = timeit(lambda: backend.gather_rows(h, idx), repeats)

    def scatter():
        acc = np.zeros((800, 512))
        backend.scatter_add_rows(acc, idx, src)

    out["scatter 4k rows d=512"] = timeit(scatter, repeats)
    return out


def bench_training_step(backend_name: str, repeats: int) -> float:
    saved = {n: getattr(kernels, n) for n in KERNEL_NAMES}
    backend = kernels.get_backend(backend_name)
    for n in KERNEL_NAMES:
        setattr(kernels, n, getattr(backend, n))
    try:
        corpus = _corpus()
        model = Model(ModelConfig(n_bars=2, latent_dim=64, gcn_layers=2, sigma=8), seed=0)
        config = T.TrainingConfig(max_updates=1, lr0=1e-3, batch_size=16, seed=0, split=(1.0, 0.0, 0.0))
        optimizer = Adam(model.parameters())
        batch = GraphBatch.from_graphs(corpus, model.config)
        model.train_mode(True)

        def step():
            total, _ = T.loss(model, batch, 0, config, eps=np.zeros((batch.n_items, 64)))
            zero_grads(model.parameters())
            total.backward()
            optimizer.step(1e-3)

        return timeit(step, max(3, repeats // 20)) / 1000.0  # ms
    finally:
        for n, impl in saved.items():
            setattr(kernels, n, impl)


def _corpus():
    rng = np.random.default_rng(2)
    graphs = []
    for _ in range(16):
        onsets = {}
        for bar in range(2):
            for track in range(4):
                for step in range(0, 32, 4):
                    if rng.random() < 0.4:
                        p = int(rng.integers(30, 90))
                        onsets[(bar, track, step, p)] = (bar, track, step, p, int(rng.integers(1, 9)))
        from polyvae.pianoroll import Onset, Pianoroll

        graphs.append(G.build_graph(Pianoroll(2, tuple(Onset(*o) for o in onsets.values())), sigma=8))
    return graphs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    backends = {"pure": kernels.get_backend("pure")}
    try:
        backends["fast"] = kernels.get_backend("fast")
    except ImportError:
        print("fast kernels extension not built; benchmarking pure only")

    results = {name: bench_kernels(mod, args.repeats) for name, mod in backends.items()}
    rows = list(results["pure"])
    width = max(len(r) for r in rows)
    header = f"{'kernel':<{width}}  " + "".join(f"{n + ' (us)':>14}" for n in results)
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for row in rows:
        line = f"{row:<{width}}  " + "".join(f"{results[n][row]:>14.1f}" for n in results)
        if len(results) == 2:
            line += f"{results['pure'][row] / results['fast'][row]:>9.1f}x"
        print(line)

    print()
    for name in backends:
        ms = bench_training_step(name, args.repeats)
        print(f"full training step (batch 16, d=64, L=2): {name:<5} {ms:8.1f} ms")
    print(f"\nactive backend at import: {kernels.BACKEND}")


if __name__ == "__main__":
    main()

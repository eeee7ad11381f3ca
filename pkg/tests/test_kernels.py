"""Backend agreement: the compiled kernels and the numpy fallback must
implement identical contracts."""

import numpy as np
import pytest

from polyvae.nn import kernels

pure = kernels.get_backend("pure")
try:
    fast = kernels.get_backend("fast")
except ImportError:
    fast = None

needs_fast = pytest.mark.skipif(fast is None, reason="fast kernels extension not built")


@needs_fast
class TestAgreement:
    @pytest.mark.parametrize("stride,pad", [(1, 0), (1, 1), (2, 1), (3, 2)])
    def test_conv2d(self, rng, stride, pad):
        x = rng.normal(size=(3, 5, 8, 9))
        k = rng.normal(size=(4, 5, 3, 3))
        b = rng.normal(size=4)
        y_f = fast.conv2d_forward(x, k, b, stride, pad)
        y_p = pure.conv2d_forward(x, k, b, stride, pad)
        assert np.abs(y_f - y_p).max() < 1e-10
        gy = rng.normal(size=y_f.shape)
        for a, bb in zip(fast.conv2d_backward(x, k, gy, stride, pad),
                         pure.conv2d_backward(x, k, gy, stride, pad)):
            assert np.abs(a - bb).max() < 1e-10

    def test_maxpool(self, rng):
        x = rng.normal(size=(2, 3, 6, 8))
        y_f = fast.maxpool2d_forward(x, 2)
        y_p = pure.maxpool2d_forward(x, 2)
        assert (y_f == y_p).all()
        gy = rng.normal(size=y_f.shape)
        assert (fast.maxpool2d_backward(x, y_f, gy, 2) == pure.maxpool2d_backward(x, y_p, gy, 2)).all()

    def test_maxpool_tie_split_agrees(self):
        x = np.zeros((1, 1, 2, 4))
        x[0, 0, 0, 0] = x[0, 0, 1, 1] = 1.0  # tie in the first window
        y = fast.maxpool2d_forward(x, 2)
        gy = np.ones_like(y)
        g_f = fast.maxpool2d_backward(x, y, gy, 2)
        g_p = pure.maxpool2d_backward(x, y, gy, 2)
        assert (g_f == g_p).all()
        assert g_f[0, 0, 0, 0] == 0.5 and g_f[0, 0, 1, 1] == 0.5

    def test_scatter_gather(self, rng):
        x = rng.normal(size=(7, 5))
        idx = rng.integers(0, 7, size=11)
        assert (fast.gather_rows(x, idx) == pure.gather_rows(x, idx)).all()
        src = rng.normal(size=(11, 5))
        out_f = np.zeros((7, 5))
        out_p = np.zeros((7, 5))
        fast.scatter_add_rows(out_f, idx, src)
        pure.scatter_add_rows(out_p, idx, src)
        assert np.abs(out_f - out_p).max() < 1e-12

    def test_empty_index_arrays(self):
        x = np.zeros((3, 2))
        idx = np.zeros(0, dtype=np.int64)
        assert fast.gather_rows(x, idx).shape == (0, 2)
        out = np.zeros((3, 2))
        fast.scatter_add_rows(out, idx, np.zeros((0, 2)))
        assert not out.any()


def test_backend_selection_env(monkeypatch):
    assert kernels.BACKEND in ("fast", "pure")
    with pytest.raises(ValueError):
        kernels.get_backend("magic")


def test_model_forward_matches_across_backends(rng):
    """The full model forward agrees between backends (both are loaded
    here; the default import picks one, this drives both explicitly)."""
    if fast is None:
        pytest.skip("fast kernels extension not built")
    from polyvae import graph as G
    from polyvae.model import GraphBatch, Model, ModelConfig
    from polyvae.nn import ops

    from conftest import random_roll

    model = Model(ModelConfig(n_bars=2, latent_dim=8, gcn_layers=2, sigma=4), seed=0)
    graphs = [G.build_graph(random_roll(rng, density=0.04), sigma=4) for _ in range(2)]
    batch = GraphBatch.from_graphs(graphs, model.config)

    results = {}
    saved = {n: getattr(kernels, n) for n in
             ("conv2d_forward", "conv2d_backward", "maxpool2d_forward",
              "maxpool2d_backward", "scatter_add_rows", "gather_rows")}
    try:
        for name, backend in (("fast", fast), ("pure", pure)):
            for fn in saved:
                setattr(kernels, fn, getattr(backend, fn))
            results[name] = model.encode(batch).mu.data.copy()
    finally:
        for fn, impl in saved.items():
            setattr(kernels, fn, impl)
    assert np.abs(results["fast"] - results["pure"]).max() < 1e-9

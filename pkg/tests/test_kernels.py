"""Compiled and numpy kernel backends must agree."""
import numpy as np
import pytest

from loadagg import _kernels
from loadagg.models.svr import rbf_kernel

pure = _kernels.pure
compiled = _kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_name():
    assert _kernels.BACKEND in ("cython", "numpy")


@needs_compiled
@pytest.mark.parametrize("m", [1, 2, 3])
def test_apen_counts_identical(m):
    rng = np.random.default_rng(m)
    x = rng.random(700)          # longer than one numpy block
    r = 0.2 * x.std()
    a, b = pure.apen_counts(x, m, r), compiled.apen_counts(x, m, r)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_apen_counts_include_self_matches():
    cm, cm1 = pure.apen_counts(np.arange(10.0), 2, 0.5)
    assert np.all(cm == 1) and np.all(cm1 == 1)


def _split_inputs(seed, n=60, n_feat=4, n_nodes=3):
    rng = np.random.default_rng(seed)
    xt = np.ascontiguousarray(np.round(rng.normal(size=(n_feat, n)), 1))
    order = np.ascontiguousarray(np.argsort(xt, axis=1, kind="stable").astype(np.intp))
    node_of = rng.integers(-1, n_nodes, n).astype(np.intp)
    resid = rng.normal(size=n)
    act = node_of >= 0
    node_sum = np.bincount(node_of[act], weights=resid[act], minlength=n_nodes)
    node_cnt = np.bincount(node_of[act], minlength=n_nodes).astype(np.intp)
    return xt, order, node_of, resid, node_sum, node_cnt


@needs_compiled
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("min_leaf", [1, 3])
def test_level_splits_identical(seed, min_leaf):
    args = _split_inputs(seed)
    ga, fa, ta = pure.level_splits(*args, min_leaf)
    gb, fb, tb = compiled.level_splits(*args, min_leaf)
    np.testing.assert_array_equal(fa, fb)
    np.testing.assert_array_equal(ta, tb)
    np.testing.assert_allclose(ga, gb, rtol=1e-12, atol=1e-12)


@needs_compiled
@pytest.mark.parametrize("seed", range(3))
def test_smo_identical(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(40, 3))
    y = np.sin(x[:, 0]) + 0.1 * rng.normal(size=40)
    k = np.ascontiguousarray(rbf_kernel(x, x, 0.5))
    a = pure.smo(k, y, 10.0, 0.05, 1e-3, 100000)
    b = compiled.smo(k, y, 10.0, 0.05, 1e-3, 100000)
    assert a[2] == b[2]
    np.testing.assert_allclose(a[0], b[0], rtol=1e-9, atol=1e-12)

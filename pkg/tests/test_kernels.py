import numpy as np
import pytest

from apex_emotion import _kernels_py, kernels

try:
    from apex_emotion import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

needs_compiled = pytest.mark.skipif(_compiled is None, reason="compiled kernels not built")


def test_backend_switching():
    assert "python" in kernels.available_backends()
    previous = kernels.backend_name()
    kernels.set_backend("python")
    assert kernels.backend_name() == "python"
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")
    if _compiled is not None:
        kernels.set_backend("cython")
        assert kernels.backend_name() == "cython"
    kernels.set_backend(previous)


@needs_compiled
def test_best_split_equivalence():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n, d = int(rng.integers(2, 60)), int(rng.integers(1, 6))
        X = rng.integers(0, 6, size=(n, d)).astype(np.float64)
        y = rng.integers(0, 2, n).astype(np.int8)
        w = rng.integers(0, 3, n).astype(np.float64)
        XT = np.ascontiguousarray(X.T)
        rows = np.flatnonzero(w > 0)
        if rows.size == 0:
            continue
        idx = np.ascontiguousarray(
            np.stack([rows[np.argsort(X[rows, f], kind="stable")] for f in range(d)]), dtype=np.intp)
        leaf = float(rng.integers(1, 4))
        a = _kernels_py.best_split(XT, y, w, idx, leaf)
        b = _compiled.best_split(XT, y, w, idx, leaf)
        assert a[:2] == b[:2]
        assert a[2] == pytest.approx(b[2], abs=1e-12)


@needs_compiled
def test_partition_equivalence():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n, d = int(rng.integers(1, 80)), int(rng.integers(1, 5))
        idx = np.ascontiguousarray(np.stack([rng.permutation(n) for _ in range(d)]), dtype=np.intp)
        go = (rng.random(n) < 0.4).astype(np.uint8)
        k = int(go.sum())
        for x, z in zip(_kernels_py.partition(idx, go, k), _compiled.partition(idx, go, k)):
            assert np.array_equal(x, z)


@needs_compiled
def test_threshold_peaks_equivalence():
    rng = np.random.default_rng(2)
    for _ in range(50):
        sig = rng.random(2000) ** 4
        cand = np.sort(rng.choice(2000, 120, replace=False)).astype(np.intp)
        a = _kernels_py.threshold_peaks(sig, cand, 50, float(sig.max()), 8)
        b = _compiled.threshold_peaks(sig, cand, 50, float(sig.max()), 8)
        assert np.array_equal(a, b)


@needs_compiled
def test_tinn_equivalence():
    rng = np.random.default_rng(3)
    for _ in range(200):
        rr = rng.normal(850, 60, int(rng.integers(2, 40)))
        assert _kernels_py.tinn(rr, 7.8125) == pytest.approx(_compiled.tinn(rr, 7.8125), abs=1e-9)


@needs_compiled
def test_apply_tree_equivalence():
    from apex_emotion.tree import TreeParams, fit
    rng = np.random.default_rng(4)
    X = rng.normal(size=(300, 4))
    tree = fit(X, (X[:, 0] + X[:, 1] > 0).astype(int), TreeParams(max_depth=6, min_samples_leaf=2))
    args = (tree.feature, tree.threshold, tree.left, tree.right, X)
    assert np.array_equal(_kernels_py.apply_tree(*args), _compiled.apply_tree(*args))

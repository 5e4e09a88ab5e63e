"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

Each row reports the best-of-``repeat`` wall time per backend and the speedup.
Both backends are first checked to return identical results on the same input.
"""
import argparse
import timeit

import numpy as np

from apex_emotion import _kernels_py, kernels
from apex_emotion.features import detect_r_peaks, hrv_features
from apex_emotion.signals import Signal
from apex_emotion.tree import TreeParams, fit

try:
    from apex_emotion import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def kernel_cases(rng, scale):
    n, d = 4096 // scale, 20
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + 0.5 * rng.normal(size=n) > 0).astype(np.int8)
    w = rng.integers(0, 3, n).astype(np.float64)
    XT = np.ascontiguousarray(X.T)
    idx = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.intp)
    go = (X[:, 0] > 0).astype(np.uint8)
    energy = rng.random(15360 // scale) ** 6
    cand = np.flatnonzero((energy[1:-1] > energy[:-2]) & (energy[1:-1] >= energy[2:])) + 1
    rr = rng.normal(850, 60, 72)
    tree = fit(X, y, TreeParams(max_depth=8, min_samples_leaf=2))
    tree_args = (tree.feature, tree.threshold, tree.left, tree.right, X)
    return {
        "best_split": ("best_split", (XT, y, w, idx, 5.0)),
        "partition": ("partition", (idx, go, int(go.sum()))),
        "threshold_peaks": ("threshold_peaks", (energy, cand.astype(np.intp), 51,
                                                float(energy.max()), 8)),
        "tinn": ("tinn", (rr, 7.8125)),
        "apply_tree": ("apply_tree", tree_args),
    }


def pipeline_cases(rng, scale):
    n = 4096 // scale
    X = rng.normal(size=(n, 10))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    t = np.arange(15360 // scale) / 256.0
    ecg = Signal(np.sin(2 * np.pi * 1.2 * t) ** 31 + 0.01 * rng.normal(size=t.size), 256.0)
    return {
        "tree fit (depth 5)": lambda: fit(X, y, TreeParams()),
        "R-peak detection": lambda: detect_r_peaks(ecg),
        "HRV features": lambda: hrv_features(rng.normal(850, 60, 72)),
    }


def best_time(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--quick", action="store_true", help="smaller inputs")
    args = parser.parse_args(argv)
    if _compiled is None:
        parser.exit(1, "compiled kernels are not built; nothing to compare\n")
    rng = np.random.default_rng(0)
    scale = 4 if args.quick else 1

    print(f"{'case':<22}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for name, (fn, call_args) in kernel_cases(rng, scale).items():
        a = getattr(_kernels_py, fn)(*call_args)
        b = getattr(_compiled, fn)(*call_args)
        same = all(np.array_equal(x, z) for x, z in zip(a, b)) if isinstance(a, tuple) \
            else np.allclose(a, b, rtol=0, atol=1e-9)
        if not same:
            raise SystemExit(f"backends disagree on {name}")
        tp = best_time(lambda: getattr(_kernels_py, fn)(*call_args), args.repeat)
        tc = best_time(lambda: getattr(_compiled, fn)(*call_args), args.repeat)
        print(f"{name:<22}{1e3 * tp:>14.3f}{1e3 * tc:>14.3f}{tp / tc:>9.1f}x")

    previous = kernels.backend_name()
    for name, fn in pipeline_cases(rng, scale).items():
        times = {}
        for backend in ("python", "cython"):
            kernels.set_backend(backend)
            times[backend] = best_time(fn, args.repeat)
        print(f"{name:<22}{1e3 * times['python']:>14.3f}{1e3 * times['cython']:>14.3f}"
              f"{times['python'] / times['cython']:>9.1f}x")
    kernels.set_backend(previous)


if __name__ == "__main__":
    main()

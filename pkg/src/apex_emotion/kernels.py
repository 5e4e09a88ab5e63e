"""Backend selection for the hot kernels.

The compiled Cython module is preferred; the pure-Python module is used when
the extension was not built or when ``APEX_EMOTION_PURE_PYTHON`` is set to a
truthy value before import. Both expose the same five functions.
"""
from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _kernels_py

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _compiled = None

_FORCE_PY = os.environ.get("APEX_EMOTION_PURE_PYTHON", "").lower() in {"1", "true", "yes"}

_active: ModuleType = _kernels_py if (_FORCE_PY or _compiled is None) else _compiled


def backend_name() -> str:
    return "cython" if _active is _compiled and _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def set_backend(name: str) -> None:
    """Switch the active backend (``"python"`` or ``"cython"``)."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available; rebuild the package")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def best_split(XT, y, w, sorted_idx, min_leaf):
    """``XT`` is the transposed design matrix, shape (n_features, n_rows)."""
    return _active.best_split(
        np.ascontiguousarray(XT, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int8),
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(sorted_idx, dtype=np.intp),
        float(min_leaf),
    )


def partition(sorted_idx, go_left, n_left):
    return _active.partition(np.ascontiguousarray(sorted_idx, dtype=np.intp),
                             np.ascontiguousarray(go_left, dtype=np.uint8), int(n_left))


def threshold_peaks(integrated, candidates, refractory, init_level, n_recent=8):
    return _active.threshold_peaks(
        np.ascontiguousarray(integrated, dtype=np.float64),
        np.ascontiguousarray(candidates, dtype=np.intp),
        int(refractory),
        float(init_level),
        int(n_recent),
    )


def tinn(rr, bin_width):
    return float(_active.tinn(np.ascontiguousarray(rr, dtype=np.float64), float(bin_width)))


def apply_tree(feature, threshold, left, right, X):
    return _active.apply_tree(feature, threshold, left, right,
                              np.ascontiguousarray(X, dtype=np.float64))

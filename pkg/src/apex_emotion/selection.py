"""Three-stage feature selection: variance threshold, ANOVA K-best, forest importance."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, SelectionError
from .features import REGISTRY_INDEX, FeatureId, FeatureMatrix
from .tree import TreeParams, grow

DEFAULT_TAU = 1e-4
DEFAULT_K = 10
FOREST_SIZE = 25
FOREST_PARAMS = TreeParams(max_depth=4, min_samples_leaf=5)
# rows drawn (with replacement) per forest tree; capped for large pooled cohorts
FOREST_MAX_SAMPLES = 4096


@dataclass(frozen=True)
class StageRecord:
    stage: str
    scores: dict
    parameter: float
    kept: tuple


@dataclass(frozen=True)
class FeatureMask:
    """Ordered kept features plus the per-stage scores that produced them."""

    kept: tuple[FeatureId, ...]
    provenance: tuple[StageRecord, ...] = field(default=())

    def __post_init__(self):
        kept = tuple(self.kept)
        if not kept:
            raise SelectionError("feature mask is empty")
        if len(set(kept)) != len(kept):
            raise SelectionError("feature mask contains duplicates")
        for fid in kept:
            if fid not in REGISTRY_INDEX:
                raise SelectionError(f"feature {fid} is not in the registry")
        object.__setattr__(self, "kept", kept)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self):
        return len(self.kept)

    def names(self) -> list[str]:
        return [str(f) for f in self.kept]

    def score_of(self, fid: FeatureId) -> tuple[str, float]:
        """Score from the last stage that ranked ``fid``."""
        for rec in reversed(self.provenance):
            if fid in rec.scores:
                return rec.stage, float(rec.scores[fid])
        return "given", float("nan")


def _candidates(matrix: FeatureMatrix, features) -> tuple[FeatureId, ...]:
    if features is None:
        return tuple(matrix.feature_ids)
    return tuple(features.kept if isinstance(features, FeatureMask) else features)


def _binary_labels(labels, n: int) -> np.ndarray:
    y = np.asarray(labels).astype(np.int8).ravel()
    if y.size != n:
        raise InputError(f"{y.size} labels for {n} rows")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("labels must be 0/1")
    if y.min() == y.max():
        raise SelectionError("labels contain a single class")
    return y


def _top_k(scores: dict, k: int) -> tuple[FeatureId, ...]:
    # descending score, ties by registry position
    ranked = sorted(scores, key=lambda f: (-scores[f], REGISTRY_INDEX[f]))
    return tuple(ranked[:k])


def variance_threshold(matrix: FeatureMatrix, tau: float = DEFAULT_TAU,
                       features=None) -> FeatureMask:
    """Keep features whose population variance over all rows exceeds ``tau``."""
    if tau < 0:
        raise InputError("tau must be non-negative")
    cand = _candidates(matrix, features)
    cols = matrix.columns(cand)
    # exact zero for constant columns; the two-pass mean can leave ~1e-33
    var = np.where(np.ptp(cols, axis=0) > 0, cols.var(axis=0), 0.0)
    scores = {f: float(v) for f, v in zip(cand, var)}
    kept = tuple(f for f in cand if scores[f] > tau)
    if not kept:
        raise SelectionError(f"every feature has variance <= {tau}", table=scores)
    return FeatureMask(kept, (StageRecord("variance", scores, tau, kept),))


def anova_f(X, y) -> np.ndarray:
    """One-way ANOVA F statistic of each column between the two label groups.

    Zero within-group variance gives ``inf`` (or 0 when the groups also share
    a mean).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).ravel()
    n = X.shape[0]
    grand = X.mean(axis=0)
    between = np.zeros(X.shape[1])
    within = np.zeros(X.shape[1])
    groups = np.unique(y)
    for g in groups:
        block = X[y == g]
        mu = block.mean(axis=0)
        between += block.shape[0] * (mu - grand) ** 2
        within += ((block - mu) ** 2).sum(axis=0)
    df_b, df_w = len(groups) - 1, n - len(groups)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (between / df_b) / (within / df_w)
    f = np.where(within > 0, f, np.where(between > 0, np.inf, 0.0))
    return f


def select_k_best(matrix: FeatureMatrix, labels, k: int, features=None) -> FeatureMask:
    """Top-``k`` features by ANOVA F; ties broken by registry order."""
    cand = _candidates(matrix, features)
    if not 1 <= k <= len(cand):
        raise InputError(f"k={k} outside 1..{len(cand)}")
    y = _binary_labels(labels, len(matrix))
    f = anova_f(matrix.columns(cand), y)
    scores = {fid: float(v) for fid, v in zip(cand, f)}
    kept = _top_k(scores, k)
    return FeatureMask(kept, (StageRecord("kbest", scores, k, kept),))


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """A row order that depends only on row contents.

    Sorting on a fixed projection is enough when it has no ties; otherwise
    fall back to a full lexicographic sort.
    """
    key = X @ _projection(X.shape[1]) + 0.5 * y
    order = np.argsort(key, kind="stable")
    k = key[order]
    if np.all(k[1:] > k[:-1]):
        return order
    return np.lexsort((y,) + tuple(X.T[::-1]))


def _projection(n: int) -> np.ndarray:
    # fixed irrational-ish weights; any constant vector works
    return np.sqrt(np.arange(2, n + 2, dtype=np.float64)) * np.pi


def forest_importance(X, y, seed, n_trees: int = FOREST_SIZE,
                      params: TreeParams = FOREST_PARAMS,
                      max_samples: int | None = FOREST_MAX_SAMPLES) -> np.ndarray:
    """Total Gini decrease per column over a bootstrap forest.

    Each tree sees ``min(n, max_samples)`` rows drawn with replacement.
    Rows are put in a content-defined order before bootstrapping, so the
    result does not depend on the input row order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    if X.ndim != 2 or X.shape[0] == 0 or not np.all(np.isfinite(X)):
        raise InputError("forest input must be a non-empty finite matrix")
    order = _canonical_order(X, y)
    X, y = np.ascontiguousarray(X[order]), y[order]
    n = X.shape[0]
    draws = n if max_samples is None else min(n, int(max_samples))
    rng = np.random.default_rng(seed)
    total = np.zeros(X.shape[1])
    XT = np.ascontiguousarray(X.T)
    # bootstrap weights are integer counts, so node sums are exact and the
    # order among tied values cannot change a split; no stable sort needed
    presorted = np.argsort(XT, axis=1)
    for _ in range(n_trees):
        counts = np.bincount(rng.integers(0, n, size=draws), minlength=n).astype(np.float64)
        tree = grow(X, XT, y, counts, params, presorted)
        total += tree.importances / draws
    return total


def tree_importance_select(matrix: FeatureMatrix, labels, k: int = DEFAULT_K, seed=0,
                           features=None) -> FeatureMask:
    """Top-``k`` features by bootstrap-forest Gini importance."""
    cand = _candidates(matrix, features)
    if not 1 <= k <= len(cand):
        raise InputError(f"k={k} outside 1..{len(cand)}")
    y = _binary_labels(labels, len(matrix))
    imp = forest_importance(matrix.columns(cand), y, seed)
    scores = {fid: float(v) for fid, v in zip(cand, imp)}
    kept = _top_k(scores, k)
    return FeatureMask(kept, (StageRecord("tree", scores, k, kept),))


def select_features(matrix: FeatureMatrix, labels, k: int = DEFAULT_K, seed=0,
                    tau: float = DEFAULT_TAU) -> FeatureMask:
    """Variance threshold, then ANOVA K-best keeping ``2k``, then forest top ``k``."""
    y = _binary_labels(labels, len(matrix))
    m1 = variance_threshold(matrix, tau)
    m2 = select_k_best(matrix, y, min(2 * k, len(m1)), features=m1)
    m3 = tree_importance_select(matrix, y, min(k, len(m2)), seed, features=m2)
    return FeatureMask(m3.kept, m1.provenance + m2.provenance + m3.provenance)


def write_mask_csv(mask: FeatureMask, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "modality", "feature", "score", "stage"])
        for rank, fid in enumerate(mask.kept, start=1):
            stage, score = mask.score_of(fid)
            w.writerow([rank, fid.modality, fid.name, repr(score), stage])


def read_mask_csv(path) -> FeatureMask:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["rank"]))
    kept = tuple(FeatureId(r["modality"], r["feature"]) for r in rows)
    by_stage: dict[str, dict] = {}
    for r, fid in zip(rows, kept):
        by_stage.setdefault(r["stage"], {})[fid] = float(r["score"])
    prov = tuple(StageRecord(st, sc, float("nan"), tuple(sc)) for st, sc in by_stage.items())
    return FeatureMask(kept, prov)


def mask_from_names(names: Sequence[str]) -> FeatureMask:
    return FeatureMask(tuple(FeatureId.parse(n) for n in names))

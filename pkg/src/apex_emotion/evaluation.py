"""Leave-one-subject-out evaluation, ROC/AUC and vertical ROC averaging."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .apex import (SubjectDataset, fit_apex, member_inferences, predict_subject,
                   trial_majority)
from .cohort import check_task
from .errors import ConfigurationError, InputError, ProtocolError
from .features import FeatureMatrix
from .selection import DEFAULT_K, DEFAULT_TAU, select_features
from .tree import TreeParams

ROC_GRID = np.linspace(0.0, 1.0, 101)
WEIGHTINGS = ("apex", "uniform")
REPORT_SCHEMA_VERSION = 1


def roc_curve(scores, labels) -> np.ndarray:
    """ROC points ``(fpr, tpr)`` from a descending sweep over distinct scores.

    The curve starts at (0, 0) and ends at (1, 1). Both classes must be present.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).astype(np.int8).ravel()
    if s.size != y.size:
        raise InputError("scores and labels differ in length")
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y == 1)
    fp = np.cumsum(y == 0)
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    fpr = np.r_[0.0, fp[last] / n_neg]
    tpr = np.r_[0.0, tp[last] / n_pos]
    if fpr[-1] != 1.0 or tpr[-1] != 1.0:
        fpr, tpr = np.r_[fpr, 1.0], np.r_[tpr, 1.0]
    return np.column_stack([fpr, tpr])


def auc(roc) -> float:
    """Trapezoidal area under a ROC curve."""
    r = np.asarray(roc, dtype=np.float64)
    fpr, tpr = r[:, 0], r[:, 1]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def interpolate_tpr(roc, grid=ROC_GRID) -> np.ndarray:
    """TPR of a curve at each grid FPR; on vertical segments the top point is used."""
    r = np.asarray(roc, dtype=np.float64)
    fpr, tpr = r[:, 0], r[:, 1]
    out = np.empty(len(grid))
    for g_i, g in enumerate(grid):
        j = int(np.searchsorted(fpr, g, side="right")) - 1
        if j < 0:
            out[g_i] = 0.0
        elif fpr[j] == g or j == len(fpr) - 1:
            out[g_i] = tpr[j]
        else:
            t = (g - fpr[j]) / (fpr[j + 1] - fpr[j])
            out[g_i] = tpr[j] + t * (tpr[j + 1] - tpr[j])
    return out


def average_roc_vertical(curves: Sequence, grid=ROC_GRID) -> dict:
    """Mean, min and max TPR over curves on a fixed FPR grid."""
    if len(curves) == 0:
        raise InputError("need at least one ROC curve")
    tprs = np.stack([interpolate_tpr(c, grid) for c in curves])
    return {"fpr": np.asarray(grid, dtype=np.float64), "tpr_mean": tprs.mean(axis=0),
            "tpr_min": tprs.min(axis=0), "tpr_max": tprs.max(axis=0)}


def fold_seed(seed: int, subject_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{subject_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class FoldResult:
    test_subject_id: str
    aggregate: np.ndarray
    predicted: np.ndarray
    labels: np.ndarray
    video_ids: np.ndarray
    accuracy: float
    trial_accuracy: float
    roc: np.ndarray | None
    auc: float | None
    member_ids: tuple
    mask: tuple
    weights: np.ndarray
    products: np.ndarray
    normalized: np.ndarray

    @property
    def flagged(self) -> bool:
        return self.roc is None

    def to_dict(self) -> dict:
        return {
            "test_subject_id": self.test_subject_id,
            "n_windows": int(self.labels.size),
            "n_members": len(self.member_ids),
            "accuracy": self.accuracy,
            "trial_accuracy": self.trial_accuracy,
            "auc": self.auc,
            "flagged_single_class": self.flagged,
            "mask": list(self.mask),
            "roc": None if self.roc is None else self.roc.tolist(),
            "windows": {
                "video_id": self.video_ids.tolist(),
                "aggregate": self.aggregate.tolist(),
                "predicted": self.predicted.tolist(),
                "label": self.labels.tolist(),
            },
        }


@dataclass
class EvaluationReport:
    task: str
    weighting: str
    folds: list
    config: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([f.accuracy for f in self.folds]))

    @property
    def mean_trial_accuracy(self) -> float:
        return float(np.mean([f.trial_accuracy for f in self.folds]))

    @property
    def roc_folds(self) -> list:
        return [f for f in self.folds if not f.flagged]

    @property
    def mean_auc(self) -> float | None:
        a = [f.auc for f in self.roc_folds]
        return float(np.mean(a)) if a else None

    @property
    def best_auc(self) -> float | None:
        a = [f.auc for f in self.roc_folds]
        return float(max(a)) if a else None

    @property
    def worst_auc(self) -> float | None:
        a = [f.auc for f in self.roc_folds]
        return float(min(a)) if a else None

    def mean_roc(self) -> dict | None:
        folds = self.roc_folds
        return average_roc_vertical([f.roc for f in folds]) if folds else None

    def to_dict(self) -> dict:
        roc = self.mean_roc()
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "task": self.task,
            "weighting": self.weighting,
            "config": self.config,
            "n_folds": len(self.folds),
            "mean_accuracy": self.mean_accuracy,
            "mean_trial_accuracy": self.mean_trial_accuracy,
            "mean_auc": self.mean_auc,
            "best_auc": self.best_auc,
            "worst_auc": self.worst_auc,
            "flagged_folds": [f.test_subject_id for f in self.folds if f.flagged],
            "mean_roc": None if roc is None else {k: v.tolist() for k, v in roc.items()},
            "folds": [f.to_dict() for f in self.folds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def weight_rows(self) -> list:
        """``(test_subject, member_ids, products, normalized, scores)`` per fold."""
        return [(f.test_subject_id, f.member_ids, f.products, f.normalized, f.weights)
                for f in self.folds]

    def write_roc_csv(self, path) -> None:
        roc = self.mean_roc()
        with open(path, "w") as fh:
            fh.write("fpr,tpr_mean,tpr_min,tpr_max\n")
            if roc is not None:
                for row in zip(roc["fpr"], roc["tpr_mean"], roc["tpr_min"], roc["tpr_max"]):
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def write_roc_svg(self, path, size: int = 360) -> None:
        roc = self.mean_roc()
        pad = 40
        inner = size - 2 * pad

        def pt(x, y):
            return f"{pad + x * inner:.2f},{size - pad - y * inner:.2f}"

        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
                 f'<rect x="{pad}" y="{pad}" width="{inner}" height="{inner}" '
                 'fill="white" stroke="black"/>',
                 f'<polyline points="{pt(0, 0)} {pt(1, 1)}" fill="none" stroke="#999" '
                 'stroke-dasharray="4,4"/>']
        if roc is not None:
            band = [pt(x, y) for x, y in zip(roc["fpr"], roc["tpr_max"])]
            band += [pt(x, y) for x, y in zip(roc["fpr"][::-1], roc["tpr_min"][::-1])]
            parts.append(f'<polygon points="{" ".join(band)}" fill="#ccc" stroke="none"/>')
            mean = " ".join(pt(x, y) for x, y in zip(roc["fpr"], roc["tpr_mean"]))
            parts.append(f'<polyline points="{mean}" fill="none" stroke="#c00" stroke-width="2"/>')
        parts.append(f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle" '
                     'font-size="12">False positive rate</text>')
        parts.append(f'<text x="12" y="{size / 2}" text-anchor="middle" font-size="12" '
                     f'transform="rotate(-90 12 {size / 2})">True positive rate</text>')
        title = f"{self.task} ({self.weighting})"
        if self.mean_auc is not None:
            title += f" mean AUC {self.mean_auc:.3f}"
        parts.append(f'<text x="{size / 2}" y="20" text-anchor="middle" font-size="13">{title}</text>')
        parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(parts) + "\n")


@dataclass(frozen=True)
class EvalConfig:
    params: TreeParams = TreeParams()
    k_features: int = DEFAULT_K
    tau: float = DEFAULT_TAU
    standardize_traits: bool = False

    def __post_init__(self):
        if self.k_features < 1:
            raise ConfigurationError("k_features must be at least 1")
        if self.tau < 0:
            raise ConfigurationError("tau must be non-negative")

    def to_dict(self) -> dict:
        return {"max_depth": self.params.max_depth,
                "min_samples_leaf": self.params.min_samples_leaf,
                "min_impurity_decrease": self.params.min_impurity_decrease,
                "k_features": self.k_features, "tau": self.tau,
                "standardize_traits": self.standardize_traits}


def _fold(cohort: Sequence[SubjectDataset], test_index: int, task: str, seed: int,
          config: EvalConfig, weightings, tree_cache: dict | None = None) -> dict:
    test = cohort[test_index]
    train = [s for i, s in enumerate(cohort) if i != test_index]
    fseed = fold_seed(seed, test.subject_id)
    train_rows = _concat([s.rows for s in train])
    mask = select_features(train_rows, train_rows.labels(task), config.k_features, fseed,
                           config.tau)
    model = fit_apex(train, config.params, mask, task, fseed, config.standardize_traits,
                     tree_cache)
    if test.subject_id in model.member_ids:
        raise ProtocolError(f"fold {test.subject_id}: test subject leaked into the ensemble")
    inferences = member_inferences(model, test.rows.columns(mask.kept))
    labels = test.rows.labels(task)
    videos = test.rows.video_ids
    truth = trial_majority(videos, labels)
    out = {}
    for weighting in weightings:
        pred = predict_subject(model, test, weighting, inferences)
        trial_pred = trial_majority(videos, pred.predicted)
        trial_acc = float(np.mean([trial_pred[v] == truth[v] for v in truth]))
        if labels.min() != labels.max():
            roc = roc_curve(pred.aggregate, labels)
            area = auc(roc)
        else:
            roc, area = None, None
        out[weighting] = FoldResult(
            test.subject_id, pred.aggregate, pred.predicted, labels.copy(), videos.copy(),
            float(np.mean(pred.predicted == labels)), trial_acc, roc, area,
            pred.member_ids, tuple(mask.names()), pred.weights.scores, pred.products,
            pred.normalized)
    return out


def _concat(mats: Sequence[FeatureMatrix]) -> FeatureMatrix:
    first = mats[0]
    return FeatureMatrix(np.concatenate([m.values for m in mats]), first.feature_ids,
                         np.concatenate([m.subject_ids for m in mats]),
                         np.concatenate([m.video_ids for m in mats]),
                         np.concatenate([m.window_index for m in mats]),
                         np.concatenate([m.arousal for m in mats]),
                         np.concatenate([m.valence for m in mats]))


def _fold_job(shared, index):
    # the cache dict is per process; trees are deterministic so sharing is invisible
    cohort, task, seed, config, weightings, cache = shared
    return _fold(cohort, index, task, seed, config, weightings, cache)


def loso_compare(cohort: Sequence[SubjectDataset], task: str, seed: int = 0,
                 config: EvalConfig | None = None, weightings=WEIGHTINGS,
                 jobs: int = 1) -> dict[str, EvaluationReport]:
    """Run every fold once and score it under each weighting scheme.

    All weightings share the fold's feature mask and member trees, so their
    reports differ only in how members are combined.
    """
    check_task(task)
    config = config or EvalConfig()
    if len(cohort) < 2:
        raise ProtocolError("leave-one-subject-out needs at least two subjects")
    ids = [s.subject_id for s in cohort]
    if len(set(ids)) != len(ids):
        raise ProtocolError("duplicate subject ids in cohort")
    shared = (list(cohort), task, seed, config, tuple(weightings), {})
    results = parallel_map(_fold_job, range(len(cohort)), jobs, shared=shared)
    meta = dict(config.to_dict(), seed=seed)
    return {w: EvaluationReport(task, w, [r[w] for r in results], meta) for w in weightings}


def loso_evaluate(cohort: Sequence[SubjectDataset], params: TreeParams | None = None,
                  task: str = "arousal", seed: int = 0, config: EvalConfig | None = None,
                  weighting: str = "apex", jobs: int = 1) -> EvaluationReport:
    """Leave-one-subject-out: each subject is predicted by the other subjects' trees."""
    if config is None:
        config = EvalConfig(params or TreeParams())
    return loso_compare(cohort, task, seed, config, (weighting,), jobs)[weighting]

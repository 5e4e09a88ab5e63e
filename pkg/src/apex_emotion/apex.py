"""Personality-attention bagging.

One weak tree per training subject. At inference the test subject's trait
vector is compared with every member's by inner product; the products are
min-max rescaled to [0, 1], passed through a softmax, and the resulting
scores weight the members' positive-class probabilities. The weighted sum
is thresholded at 0.5 (inclusive).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cohort import TRAIT_NAMES, PersonalityTraits, check_task
from .errors import FitError, InputError, ProtocolError
from .features import FeatureMatrix
from .selection import FeatureMask, mask_from_names
from .tree import DecisionTree, TreeParams, fit

__all__ = [
    "PersonalityTraits", "SubjectDataset", "AttentionWeights", "ApexModel", "Member",
    "SubjectPrediction", "personality_product", "normalize_products", "attention_scores",
    "uniform_weights", "ensemble_predict", "fit_apex", "predict_subject", "member_inferences",
    "trial_majority",
]


@dataclass(eq=False)
class SubjectDataset:
    """One participant's traits and window-level feature rows."""

    subject_id: str
    traits: PersonalityTraits
    rows: FeatureMatrix

    def __post_init__(self):
        if len(self.rows) == 0:
            raise InputError(f"subject {self.subject_id} has no feature rows")
        if not np.all(self.rows.subject_ids == self.subject_id):
            raise InputError(f"rows of subject {self.subject_id} carry other subject ids")


@dataclass(frozen=True, eq=False)
class AttentionWeights:
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise InputError("attention weights must be a non-empty vector")
        if abs(s.sum() - 1.0) > 1e-9 or np.any(s <= 0) or np.any(s > 1):
            raise InputError("attention weights must be positive and sum to 1")
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return self.scores.size


def personality_product(p_i, p_x) -> float:
    """Inner product of two raw trait vectors."""
    a = p_i.as_array() if isinstance(p_i, PersonalityTraits) else np.asarray(p_i, dtype=np.float64)
    b = p_x.as_array() if isinstance(p_x, PersonalityTraits) else np.asarray(p_x, dtype=np.float64)
    return float(np.dot(a, b))


def normalize_products(products) -> np.ndarray:
    """Min-max rescale to [0, 1]; all-equal input maps to zeros."""
    p = np.asarray(products, dtype=np.float64).ravel()
    if p.size == 0:
        raise InputError("no products to normalize")
    lo, hi = p.min(), p.max()
    if hi == lo:
        return np.zeros_like(p)
    return (p - lo) / (hi - lo)


def attention_scores(normalized) -> AttentionWeights:
    """Softmax of the normalized products."""
    x = np.asarray(normalized, dtype=np.float64).ravel()
    if x.size == 0:
        raise InputError("no inputs to softmax")
    if np.any(x < 0) or np.any(x > 1):
        raise InputError("softmax inputs must lie in [0, 1]")
    e = np.exp(x)
    return AttentionWeights(e / e.sum())


def uniform_weights(n: int) -> AttentionWeights:
    e = np.ones(n)
    return AttentionWeights(e / e.sum())


def ensemble_predict(inferences, weights: AttentionWeights):
    """Weighted vote followed by the binary step.

    ``inferences`` is either one probability per member or a
    (members, windows) array. Returns ``(aggregate, class)`` with matching
    shape; class is 1 iff the aggregate is at least 0.5.
    """
    I = np.asarray(inferences, dtype=np.float64)
    scores = weights.scores if isinstance(weights, AttentionWeights) else np.asarray(weights)
    if I.shape[0] != scores.size:
        raise InputError(f"{I.shape[0]} inferences for {scores.size} weights")
    aggregate = np.clip(scores @ I, 0.0, 1.0)
    cls = (aggregate >= 0.5).astype(np.int8)
    if aggregate.ndim == 0:
        return float(aggregate), int(cls)
    return aggregate, cls


@dataclass(frozen=True, eq=False)
class Member:
    subject_id: str
    traits: PersonalityTraits
    tree: DecisionTree


@dataclass(frozen=True, eq=False)
class ApexModel:
    members: tuple[Member, ...]
    mask: FeatureMask
    task: str
    params: TreeParams = TreeParams()
    standardize_traits: bool = False

    def __post_init__(self):
        ids = [m.subject_id for m in self.members]
        if len(set(ids)) != len(ids):
            raise FitError("member subject ids must be unique")
        for m in self.members:
            if m.tree.n_features != len(self.mask):
                raise FitError("member tree dimensionality does not match the feature mask")

    @property
    def member_ids(self) -> list[str]:
        return [m.subject_id for m in self.members]

    def __len__(self):
        return len(self.members)

    def trait_matrix(self) -> np.ndarray:
        return np.stack([m.traits.as_array() for m in self.members])

    # -- bundle --------------------------------------------------------------

    def save(self, directory) -> Path:
        directory = Path(directory)
        (directory / "trees").mkdir(parents=True, exist_ok=True)
        members = []
        for m in self.members:
            rel = f"trees/{m.subject_id}.json"
            (directory / rel).write_text(m.tree.to_json())
            members.append({"subject_id": m.subject_id,
                            "traits": {n: getattr(m.traits, n) for n in TRAIT_NAMES},
                            "tree": rel})
        meta = {
            "task": self.task,
            "mask": self.mask.names(),
            "params": {"max_depth": self.params.max_depth,
                       "min_samples_leaf": self.params.min_samples_leaf,
                       "min_impurity_decrease": self.params.min_impurity_decrease},
            "standardize_traits": self.standardize_traits,
            "members": members,
        }
        (directory / "model.json").write_text(json.dumps(meta, indent=2))
        return directory

    @classmethod
    def load(cls, directory) -> ApexModel:
        directory = Path(directory)
        meta = json.loads((directory / "model.json").read_text())
        members = tuple(
            Member(m["subject_id"],
                   PersonalityTraits(**m["traits"]),
                   DecisionTree.from_json((directory / m["tree"]).read_text()))
            for m in meta["members"])
        return cls(members, mask_from_names(meta["mask"]), meta["task"],
                   TreeParams(**meta["params"]), meta.get("standardize_traits", False))


def fit_apex(cohort: Sequence[SubjectDataset], params: TreeParams | None, mask: FeatureMask,
             task: str, seed=None, standardize_traits: bool = False,
             tree_cache: dict | None = None) -> ApexModel:
    """One tree per subject, fit only on that subject's rows, in cohort order.

    Tree fitting is deterministic, so ``tree_cache`` (keyed by subject, mask,
    task and params) lets repeated fits over overlapping cohorts reuse trees.
    """
    check_task(task)
    if len(cohort) == 0:
        raise FitError("cannot fit an ensemble on an empty cohort")
    params = params or TreeParams()
    members = []
    for subj in cohort:
        key = (subj.subject_id, mask.kept, task, params)
        tree = None if tree_cache is None else tree_cache.get(key)
        if tree is None:
            tree = fit(subj.rows.columns(mask.kept), subj.rows.labels(task), params, seed)
            if tree_cache is not None:
                tree_cache[key] = tree
        members.append(Member(subj.subject_id, subj.traits, tree))
    return ApexModel(tuple(members), mask, task, params, standardize_traits)


def _trait_products(model: ApexModel, test_traits: PersonalityTraits) -> np.ndarray:
    P = model.trait_matrix()
    x = test_traits.as_array()
    if model.standardize_traits:
        mu = P.mean(axis=0)
        sd = P.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        P, x = (P - mu) / sd, (x - mu) / sd
    return P @ x


@dataclass(frozen=True, eq=False)
class SubjectPrediction:
    subject_id: str
    aggregate: np.ndarray
    predicted: np.ndarray
    weights: AttentionWeights
    products: np.ndarray
    normalized: np.ndarray
    member_ids: tuple[str, ...]


def member_inferences(model: ApexModel, X) -> np.ndarray:
    """(members, windows) matrix of positive-class probabilities."""
    X = np.asarray(X, dtype=np.float64)
    return np.stack([m.tree.predict_proba(X) for m in model.members])


def predict_subject(model: ApexModel, test: SubjectDataset, weighting: str = "apex",
                    inferences: np.ndarray | None = None) -> SubjectPrediction:
    """Per-window aggregates and classes for an unseen subject.

    ``weighting="uniform"`` replaces the attention scores with 1/N (plain
    bagging over the same members).
    """
    if test.subject_id in model.member_ids:
        raise ProtocolError(f"test subject {test.subject_id} is a member of the ensemble")
    products = _trait_products(model, test.traits)
    normalized = normalize_products(products)
    if weighting == "apex":
        weights = attention_scores(normalized)
    elif weighting == "uniform":
        weights = uniform_weights(len(model))
    else:
        raise InputError(f"unknown weighting {weighting!r}")
    if inferences is None:
        inferences = member_inferences(model, test.rows.columns(model.mask.kept))
    aggregate, predicted = ensemble_predict(inferences, weights)
    return SubjectPrediction(test.subject_id, aggregate, predicted, weights, products,
                             normalized, tuple(model.member_ids))


def trial_majority(video_ids, predicted) -> dict:
    """Trial-level class by majority over windows; a tie counts as class 1."""
    votes: dict = {}
    for v, c in zip(video_ids, predicted):
        pos, tot = votes.get(v, (0, 0))
        votes[v] = (pos + int(c), tot + 1)
    return {v: int(2 * pos >= tot) for v, (pos, tot) in votes.items()}


def write_weights_csv(rows, path) -> None:
    """One line per (test subject, member) pair.

    ``rows`` holds SubjectPrediction objects or
    ``(test_subject, member_ids, products, normalized, scores)`` tuples.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["test_subject", "member_subject", "product", "normalized", "score"])
        for row in rows:
            if isinstance(row, SubjectPrediction):
                row = (row.subject_id, row.member_ids, row.products, row.normalized,
                       row.weights.scores)
            sid, members, products, normalized, scores = row
            for mid, p, z, s in zip(members, products, normalized, scores):
                w.writerow([sid, mid, repr(float(p)), repr(float(z)), repr(float(s))])

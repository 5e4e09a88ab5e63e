"""CART decision tree (Gini) with probabilistic leaves, used as the weak learner."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, FitError, InputError

_DECREASE_EPS = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = 5
    min_samples_leaf: int = 5
    min_impurity_decrease: float = 0.0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigurationError("max_depth must be non-negative or None")
        if self.min_samples_leaf < 1:
            raise ConfigurationError("min_samples_leaf must be a positive integer")
        if self.min_impurity_decrease < 0:
            raise ConfigurationError("min_impurity_decrease must be >= 0")


@dataclass(eq=False)
class DecisionTree:
    """Flat-array binary tree. ``feature[i] == -1`` marks a leaf.

    ``value`` holds the positive-class fraction of each node and ``support``
    its (weighted) training count.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    support: np.ndarray
    n_features: int
    importances: np.ndarray | None = None
    decreases: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InputError(
                f"expected rows with {self.n_features} features, got shape {X.shape}")
        return X

    def apply(self, X) -> np.ndarray:
        X = self._check(X)
        return kernels.apply_tree(self.feature, self.threshold, self.left, self.right, X)

    def predict_proba(self, X):
        """Leaf positive fraction; a 1-D row returns a float, a 2-D block an array."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return float(self.value[self.apply(X[None, :])[0]])
        return self.value[self.apply(X)]

    def predict(self, X):
        return (np.asarray(self.predict_proba(X)) >= 0.5).astype(np.int8)

    def __eq__(self, other):
        # structural: same splits and same leaves
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        def node(i):
            if self.feature[i] < 0:
                n = float(self.support[i])
                return {"p": float(self.value[i]), "n": int(n) if n.is_integer() else n}
            return {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                    "left": node(int(self.left[i])), "right": node(int(self.right[i]))}
        return {"n_features": self.n_features, "root": node(0)}

    @classmethod
    def from_dict(cls, data: dict) -> DecisionTree:
        feature, threshold, left, right, value, support = [], [], [], [], [], []

        def add(nd) -> int:
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(nd.get("p", np.nan)))
            support.append(float(nd.get("n", 0)))
            if "feature" in nd:
                feature[i] = int(nd["feature"])
                threshold[i] = float(nd["threshold"])
                left[i] = add(nd["left"])
                right[i] = add(nd["right"])
            return i

        add(data["root"])
        tree = cls(np.array(feature, dtype=np.intp), np.array(threshold), np.array(left, dtype=np.intp),
                   np.array(right, dtype=np.intp), np.array(value), np.array(support),
                   int(data["n_features"]))
        # internal nodes carry no probability in the file; recompute from leaves
        for i in reversed(range(tree.n_nodes)):
            if tree.feature[i] >= 0:
                l, r = tree.left[i], tree.right[i]
                tot = tree.support[l] + tree.support[r]
                tree.support[i] = tot
                tree.value[i] = (tree.value[l] * tree.support[l]
                                 + tree.value[r] * tree.support[r]) / tot if tot else 0.0
        return tree

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> DecisionTree:
        return cls.from_dict(json.loads(text))


def fit(X, y, params: TreeParams | None = None, seed=None, sample_weight=None,
        presorted=None) -> DecisionTree:
    """Grow a CART tree greedily.

    Each node takes the (feature, midpoint threshold) with the largest Gini
    decrease; ties go to the lower feature index, then the lower threshold.
    Rows with ``value <= threshold`` go left. Growth stops at ``max_depth``,
    on pure nodes, when no split leaves ``min_samples_leaf`` on both sides,
    or when a positive ``min_impurity_decrease`` is not exceeded. With the
    default of 0 a zero-decrease split is still taken, which is what lets a
    depth-2 tree separate XOR.

    ``seed`` is accepted for interface symmetry; fitting is deterministic.
    ``presorted`` may carry ``argsort(X, axis=0).T`` to skip re-sorting when
    many trees are grown on the same rows with different weights.
    """
    params = params or TreeParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise FitError(f"cannot fit a tree on data of shape {np.shape(X)}")
    y = np.ascontiguousarray(y, dtype=np.int8).ravel()
    if y.shape[0] != X.shape[0]:
        raise FitError("X and y have different numbers of rows")
    if not np.all((y == 0) | (y == 1)):
        raise FitError("labels must be 0/1")
    if not np.all(np.isfinite(X)):
        raise FitError("features must be finite")
    n, n_features = X.shape
    w = np.ones(n) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=np.float64)
    if w.shape != (n,) or np.any(w < 0):
        raise FitError("sample weights must be a non-negative vector with one entry per row")
    if not np.any(w > 0):
        raise FitError("all sample weights are zero")
    if presorted is None:
        presorted = np.argsort(X, axis=0, kind="stable").T
    return grow(X, np.ascontiguousarray(X.T), y, w, params, presorted)


def grow(X, XT, y, w, params: TreeParams, presorted) -> DecisionTree:
    """Unchecked tree growth on validated inputs.

    ``presorted`` is ``argsort(X, axis=0).T`` over all rows; rows with zero
    weight are dropped here. Used directly by the bootstrap forest, which
    shares ``XT`` and ``presorted`` across trees.
    """
    n, n_features = X.shape
    positive = (w > 0).view(np.uint8)
    root_idx, _ = kernels.partition(presorted, positive, int(positive.sum()))

    wy = w * y
    min_leaf = float(params.min_samples_leaf)
    max_depth = np.inf if params.max_depth is None else params.max_depth
    feature, threshold, left, right, value, support, decrease = [], [], [], [], [], [], []
    importances = np.zeros(n_features)
    in_left = np.zeros(n, dtype=np.uint8)

    def new_node(W, P):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(P / W)
        support.append(W)
        decrease.append(0.0)
        return len(feature) - 1

    def _expandable(depth, node):
        p = value[node]
        return depth < max_depth and 0.0 < p < 1.0 and support[node] >= 2 * min_leaf

    r0 = root_idx[0]
    stack = [(root_idx, 0, new_node(float(w[r0].sum()), float(wy[r0].sum())))]
    while stack:
        sidx, depth, node = stack.pop()
        W = support[node]
        if not _expandable(depth, node):
            continue
        f, t, dec = kernels.best_split(XT, y, w, sidx, min_leaf)
        min_dec = params.min_impurity_decrease
        if f < 0 or (min_dec > 0 and dec <= min_dec + _DECREASE_EPS):
            continue
        members = sidx[0]
        go_left = XT[f, members] <= t
        wm, pm = w[members], wy[members]
        li = new_node(float(wm[go_left].sum()), float(pm[go_left].sum()))
        ri = new_node(float(wm[~go_left].sum()), float(pm[~go_left].sum()))
        feature[node], threshold[node] = f, t
        left[node], right[node] = li, ri
        decrease[node] = dec
        importances[f] += W * dec
        if not (_expandable(depth + 1, li) or _expandable(depth + 1, ri)):
            continue
        in_left[members] = go_left
        l_idx, r_idx = kernels.partition(sidx, in_left, int(go_left.sum()))
        in_left[members] = 0
        # right pushed first so the left subtree is numbered first
        stack.append((r_idx, depth + 1, ri))
        stack.append((l_idx, depth + 1, li))

    # renumber nodes in preorder (matches the serialized layout)
    order, todo = [], [0]
    while todo:
        i = todo.pop()
        order.append(i)
        if feature[i] >= 0:
            todo.extend((right[i], left[i]))
    order = np.array(order, dtype=np.intp)
    new_id = np.empty_like(order)
    new_id[order] = np.arange(order.size)
    feat = np.array(feature, dtype=np.intp)[order]
    internal = feat >= 0
    lft = np.where(internal, new_id[np.array(left, dtype=np.intp)[order]], -1)
    rgt = np.where(internal, new_id[np.array(right, dtype=np.intp)[order]], -1)
    return DecisionTree(feat, np.array(threshold)[order], lft.astype(np.intp), rgt.astype(np.intp),
                        np.array(value)[order], np.array(support)[order], n_features,
                        importances, np.array(decrease)[order])


def predict_proba(tree: DecisionTree, x):
    return tree.predict_proba(x)

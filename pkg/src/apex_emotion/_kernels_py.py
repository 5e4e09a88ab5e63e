"""Pure-Python implementations of the hot kernels.

These mirror ``_kernels.pyx`` one-to-one and are used whenever the compiled
extension is unavailable (or ``APEX_EMOTION_PURE_PYTHON=1`` is set).
"""
from __future__ import annotations

import numpy as np

# Two candidate scores closer than this are treated as tied.
TIE_EPS = 1e-12


def best_split(XT, y, w, sorted_idx, min_leaf):
    """Greedy Gini split search over the rows of one node.

    Parameters
    ----------
    XT : (n_features, n_total) float64 array, the transposed design matrix
    y : (n_total,) integer array of 0/1 labels
    w : (n_total,) float64 sample weights
    sorted_idx : (n_features, m) integer array; row ``f`` lists the node's
        rows ordered by ``X[:, f]``.
    min_leaf : minimum total weight on each side of a split.

    Returns
    -------
    (feature, threshold, decrease) with ``feature == -1`` when no admissible
    split exists. ``decrease`` is the node-level Gini impurity decrease.
    """
    n_features, m = sorted_idx.shape
    best_f, best_t, best_score = -1, 0.0, -np.inf
    if m < 2:
        return -1, 0.0, 0.0
    rows0 = sorted_idx[0]
    W = float(np.sum(w[rows0]))
    P = float(np.sum(w[rows0] * y[rows0]))
    if W <= 0.0:
        return -1, 0.0, 0.0
    parent = (P * P + (W - P) * (W - P)) / W
    for f in range(n_features):
        rows = sorted_idx[f]
        xs = XT[f, rows]
        ws = w[rows]
        ps = ws * y[rows]
        wl = np.cumsum(ws)[:-1]
        pl = np.cumsum(ps)[:-1]
        wr = W - wl
        pr = P - pl
        ok = (xs[:-1] < xs[1:]) & (wl >= min_leaf) & (wr >= min_leaf)
        if not ok.any():
            continue
        cand = np.flatnonzero(ok)
        wl_c, pl_c, wr_c, pr_c = wl[cand], pl[cand], wr[cand], pr[cand]
        nl_c = wl_c - pl_c
        nr_c = wr_c - pr_c
        score = (pl_c * pl_c + nl_c * nl_c) / wl_c + (pr_c * pr_c + nr_c * nr_c) / wr_c
        # first candidate within TIE_EPS of the maximum (lowest threshold)
        k = int(np.argmax(score))
        top = score[k]
        k = int(np.flatnonzero(score >= top - TIE_EPS)[0])
        if score[k] > best_score + TIE_EPS:
            i = cand[k]
            lo, hi = xs[i], xs[i + 1]
            thr = 0.5 * (lo + hi)
            if thr >= hi:
                thr = lo
            best_f, best_t, best_score = f, float(thr), float(score[k])
    if best_f < 0:
        return -1, 0.0, 0.0
    return best_f, best_t, (best_score - parent) / W


def partition(sorted_idx, go_left, n_left):
    """Split every row of ``sorted_idx`` by ``go_left``, keeping the order."""
    mask = np.asarray(go_left, dtype=bool)[sorted_idx]
    n_features = sorted_idx.shape[0]
    return (np.ascontiguousarray(sorted_idx[mask].reshape(n_features, n_left)),
            np.ascontiguousarray(sorted_idx[~mask].reshape(n_features, -1)))


def threshold_peaks(integrated, candidates, refractory, init_level, n_recent):
    """Adaptive-threshold acceptance of candidate peaks.

    A candidate is accepted when its height reaches half the running mean of
    the last ``n_recent`` accepted heights (seeded with ``init_level``) and it
    lies at least ``refractory`` samples after the previously accepted peak.
    A higher candidate inside the refractory period replaces the previous one.
    """
    heights = [float(init_level)]
    accepted: list[int] = []
    for c in candidates:
        c = int(c)
        h = float(integrated[c])
        thr = 0.5 * (sum(heights) / len(heights))
        if h < thr or h <= 0.0:
            continue
        if accepted and c - accepted[-1] < refractory:
            if h > float(integrated[accepted[-1]]):
                accepted[-1] = c
                heights[-1] = h
            continue
        accepted.append(c)
        heights.append(h)
        if len(heights) > n_recent:
            heights.pop(0)
    return np.asarray(accepted, dtype=np.intp)


def tinn(rr, bin_width):
    """Baseline width M - N of the least-squares triangle fit to the RR histogram."""
    rr = np.asarray(rr, dtype=np.float64)
    e0 = np.floor(rr.min() / bin_width) * bin_width
    bins = np.floor((rr - e0) / bin_width).astype(np.intp)
    nb = int(bins.max()) + 1
    counts = np.bincount(bins, minlength=nb).astype(np.float64)
    peak = int(np.argmax(counts))
    Y = counts[peak]
    X = e0 + (peak + 0.5) * bin_width
    centers = e0 + (np.arange(nb) + 0.5) * bin_width

    # left flank: N on edges e0 + i*bw, i = -1 .. peak
    best_left, best_n = np.inf, 0.0
    left_c = centers[:peak]
    left_d = counts[:peak]
    for i in range(-1, peak + 1):
        n_edge = e0 + i * bin_width
        q = np.where(left_c > n_edge, Y * (left_c - n_edge) / (X - n_edge), 0.0)
        err = float(np.sum((left_d - q) ** 2))
        if err < best_left - 1e-9:
            best_left, best_n = err, n_edge

    # right flank: M on edges e0 + j*bw, j = peak + 1 .. nb + 1
    best_right, best_m = np.inf, 0.0
    right_c = centers[peak + 1:]
    right_d = counts[peak + 1:]
    for j in range(peak + 1, nb + 2):
        m_edge = e0 + j * bin_width
        q = np.where(right_c < m_edge, Y * (m_edge - right_c) / (m_edge - X), 0.0)
        err = float(np.sum((right_d - q) ** 2))
        if err < best_right - 1e-9:
            best_right, best_m = err, m_edge
    return best_m - best_n


def apply_tree(feature, threshold, left, right, X):
    """Route every row of ``X`` to its leaf; returns leaf node ids."""
    node = np.zeros(X.shape[0], dtype=np.intp)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node

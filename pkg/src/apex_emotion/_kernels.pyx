# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY

cnp.import_array()

cdef double TIE_EPS = 1e-12


def best_split(const double[:, ::1] XT, const cnp.int8_t[::1] y,
               const double[::1] w, const cnp.intp_t[:, ::1] sorted_idx,
               double min_leaf):
    cdef Py_ssize_t n_features = sorted_idx.shape[0]
    cdef Py_ssize_t m = sorted_idx.shape[1]
    cdef Py_ssize_t f, k, r, r_next
    cdef double W = 0.0, P = 0.0, parent
    cdef double wl, pl, wr, pr, nl, nr, score, top
    cdef double best_score = -INFINITY, best_t = 0.0, thr, lo, hi
    cdef Py_ssize_t best_f = -1
    cdef const double[::1] xf
    if m < 2:
        return -1, 0.0, 0.0
    cdef double[::1] buf = np.empty(m, dtype=np.float64)
    for k in range(m):
        r = sorted_idx[0, k]
        W += w[r]
        P += w[r] * y[r]
    if W <= 0.0:
        return -1, 0.0, 0.0
    parent = (P * P + (W - P) * (W - P)) / W

    for f in range(n_features):
        xf = XT[f]
        top = -INFINITY
        wl = 0.0
        pl = 0.0
        for k in range(m - 1):
            r = sorted_idx[f, k]
            wl += w[r]
            pl += w[r] * y[r]
            buf[k] = -INFINITY
            if not (xf[r] < xf[sorted_idx[f, k + 1]]):
                continue
            wr = W - wl
            if wl < min_leaf or wr < min_leaf:
                continue
            pr = P - pl
            nl = wl - pl
            nr = wr - pr
            score = (pl * pl + nl * nl) / wl + (pr * pr + nr * nr) / wr
            buf[k] = score
            if score > top:
                top = score
        if top == -INFINITY:
            continue
        # first candidate within TIE_EPS of the maximum
        for k in range(m - 1):
            if buf[k] >= top - TIE_EPS:
                if buf[k] > best_score + TIE_EPS:
                    lo = xf[sorted_idx[f, k]]
                    hi = xf[sorted_idx[f, k + 1]]
                    thr = 0.5 * (lo + hi)
                    if thr >= hi:
                        thr = lo
                    best_f = f
                    best_t = thr
                    best_score = buf[k]
                break
    if best_f < 0:
        return -1, 0.0, 0.0
    return int(best_f), float(best_t), (best_score - parent) / W


def partition(const cnp.intp_t[:, ::1] sorted_idx, const cnp.uint8_t[::1] go_left,
              Py_ssize_t n_left):
    cdef Py_ssize_t n_features = sorted_idx.shape[0], m = sorted_idx.shape[1]
    cdef Py_ssize_t n_right = m - n_left
    cdef Py_ssize_t f, k, a, b, r, flag
    # one slack slot: the branch-free writes below may run one past a row's end,
    # landing on the next row's first slot before it is written for real
    cdef cnp.ndarray[cnp.intp_t, ndim=1] L = np.empty(n_features * n_left + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] R = np.empty(n_features * n_right + 1, dtype=np.intp)
    cdef cnp.intp_t* lp = <cnp.intp_t*> L.data
    cdef cnp.intp_t* rp = <cnp.intp_t*> R.data
    for f in range(n_features):
        a = f * n_left
        b = f * n_right
        for k in range(m):
            r = sorted_idx[f, k]
            flag = go_left[r]
            lp[a] = r
            rp[b] = r
            a += flag
            b += 1 - flag
    return (L[:n_features * n_left].reshape(n_features, n_left),
            R[:n_features * n_right].reshape(n_features, n_right))


def threshold_peaks(const double[::1] integrated, const cnp.intp_t[::1] candidates,
                    Py_ssize_t refractory, double init_level, Py_ssize_t n_recent):
    cdef Py_ssize_t n_cand = candidates.shape[0]
    cdef cnp.ndarray[cnp.intp_t, ndim=1] out = np.empty(n_cand, dtype=np.intp)
    cdef double[::1] ring = np.empty(n_recent + 1, dtype=np.float64)
    cdef Py_ssize_t n_acc = 0, n_h = 1, head = 0, i, j, c
    cdef double h, total, thr
    ring[0] = init_level
    for i in range(n_cand):
        c = candidates[i]
        h = integrated[c]
        total = 0.0
        for j in range(n_h):
            total += ring[(head + j) % (n_recent + 1)]
        thr = 0.5 * (total / n_h)
        if h < thr or h <= 0.0:
            continue
        if n_acc > 0 and c - out[n_acc - 1] < refractory:
            if h > integrated[out[n_acc - 1]]:
                out[n_acc - 1] = c
                ring[(head + n_h - 1) % (n_recent + 1)] = h
            continue
        out[n_acc] = c
        n_acc += 1
        ring[(head + n_h) % (n_recent + 1)] = h
        n_h += 1
        if n_h > n_recent:
            head = (head + 1) % (n_recent + 1)
            n_h -= 1
    return out[:n_acc].copy()


def tinn(rr, double bin_width):
    cdef const double[::1] r = np.ascontiguousarray(rr, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], k, i, j, nb, peak = 0
    cdef double mn = r[0], mx_bin, e0, Y, X, c, q, d, err
    cdef double best_left = INFINITY, best_right = INFINITY, best_n = 0.0, best_m = 0.0
    cdef double n_edge, m_edge
    for k in range(n):
        if r[k] < mn:
            mn = r[k]
    e0 = floor(mn / bin_width) * bin_width
    cdef cnp.ndarray[cnp.intp_t, ndim=1] bins = np.empty(n, dtype=np.intp)
    nb = 0
    for k in range(n):
        bins[k] = <Py_ssize_t> floor((r[k] - e0) / bin_width)
        if bins[k] + 1 > nb:
            nb = bins[k] + 1
    cdef double[::1] counts = np.zeros(nb, dtype=np.float64)
    for k in range(n):
        counts[bins[k]] += 1.0
    for k in range(nb):
        if counts[k] > counts[peak]:
            peak = k
    Y = counts[peak]
    X = e0 + (peak + 0.5) * bin_width

    for i in range(-1, peak + 1):
        n_edge = e0 + i * bin_width
        err = 0.0
        for k in range(peak):
            c = e0 + (k + 0.5) * bin_width
            q = Y * (c - n_edge) / (X - n_edge) if c > n_edge else 0.0
            d = counts[k] - q
            err += d * d
        if err < best_left - 1e-9:
            best_left = err
            best_n = n_edge

    for j in range(peak + 1, nb + 2):
        m_edge = e0 + j * bin_width
        err = 0.0
        for k in range(peak + 1, nb):
            c = e0 + (k + 0.5) * bin_width
            q = Y * (m_edge - c) / (m_edge - X) if c < m_edge else 0.0
            d = counts[k] - q
            err += d * d
        if err < best_right - 1e-9:
            best_right = err
            best_m = m_edge
    return best_m - best_n


def apply_tree(const cnp.intp_t[::1] feature, const double[::1] threshold,
               const cnp.intp_t[::1] left, const cnp.intp_t[::1] right,
               const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], i, node
    cdef cnp.ndarray[cnp.intp_t, ndim=1] out = np.empty(n, dtype=np.intp)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out

"""Independent brute-force references shared by the unit and acceptance tests.

Everything here is written from the definitions with plain loops and the math
module, so that it shares no code path with the package under test.
"""
import math

import numpy as np
from scipy import signal as sps

from apex_emotion.features import TINN_BIN_MS
from apex_emotion.signals import Signal


def close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-12)


# -- features ------------------------------------------------------------------

def oracle_hrv(rr):
    rr = [float(v) for v in rr]
    n = len(rr)
    mav = sum(rr) / n
    sdnn = math.sqrt(sum((v - mav) ** 2 for v in rr) / n)
    diffs = [rr[i + 1] - rr[i] for i in range(n - 1)]
    rmssd = math.sqrt(sum(d * d for d in diffs) / len(diffs))
    pnn50 = 100.0 * len([d for d in diffs if abs(d) > 50]) / len(diffs)
    return {"MAV": mav, "Range": max(rr) - min(rr), "SDNN": sdnn, "RMSSD": rmssd,
            "pNN50": pnn50, "TINN": oracle_tinn(rr, TINN_BIN_MS)}


def oracle_tinn(rr, bw):
    """Joint search over all (N, M) edge pairs for the least-squares triangle."""
    e0 = math.floor(min(rr) / bw) * bw
    nb = int(math.floor((max(rr) - e0) / bw)) + 1
    counts = [0] * nb
    for v in rr:
        counts[int(math.floor((v - e0) / bw))] += 1
    peak = counts.index(max(counts))
    X, Y = e0 + (peak + 0.5) * bw, counts[peak]
    best = None
    for i in range(-1, peak + 1):
        for j in range(peak + 1, nb + 2):
            N, M = e0 + i * bw, e0 + j * bw
            err = 0.0
            for b in range(nb):
                c = e0 + (b + 0.5) * bw
                if b == peak:
                    q = Y
                elif c < X:
                    q = Y * (c - N) / (X - N) if c > N else 0.0
                else:
                    q = Y * (M - c) / (M - X) if c < M else 0.0
                err += (counts[b] - q) ** 2
            if best is None or err < best[0] - 1e-9:
                best = (err, M - N)
    return best[1]


def oracle_gsr(x, fs):
    x = [float(v) for v in x]
    n = len(x)
    mean = sum(x) / n
    f, p = sps.periodogram(np.asarray(x), fs=fs, detrend=False, scaling="spectrum")
    return {"MAV": sum(abs(v) for v in x) / n, "P2P": max(x) - min(x),
            "VAR": sum((v - mean) ** 2 for v in x) / n,
            "MeanFreq": float(np.sum(f[1:] * p[1:]) / np.sum(p[1:]))}


# -- filters -------------------------------------------------------------------

def analytic_lowpass(f, fc, fs, order):
    """Digital Butterworth magnitude via the bilinear map (prewarped analog prototype)."""
    ratio = math.tan(math.pi * f / fs) / math.tan(math.pi * fc / fs)
    return 1.0 / math.sqrt(1.0 + ratio ** (2 * order))


def analytic_bandpass(f, lo, hi, fs, order):
    w = math.tan(math.pi * f / fs)
    wl, wh = math.tan(math.pi * lo / fs), math.tan(math.pi * hi / fs)
    ratio = (w * w - wl * wh) / (w * (wh - wl))
    return 1.0 / math.sqrt(1.0 + ratio ** (2 * order))


def steady_amplitude(filter_fn, spec, f, fs, seconds):
    t = np.arange(int(seconds * fs)) / fs
    out = filter_fn(Signal(np.sin(2 * np.pi * f * t), fs), spec).samples
    mid = out[len(out) // 4: 3 * len(out) // 4]
    return float(np.max(np.abs(mid)))


# -- trees ---------------------------------------------------------------------

def gini_sum(y):
    # weighted Gini impurity n * (1 - p^2 - q^2)
    n = len(y)
    if n == 0:
        return 0.0
    p = sum(y) / n
    return n * (1 - p * p - (1 - p) ** 2)


def exhaustive_root(X, y, min_leaf):
    """Best (feature, threshold) by brute force over every midpoint candidate."""
    n, d = X.shape
    parent = gini_sum(y)
    best = None
    for f in range(d):
        values = sorted(set(X[:, f]))
        for lo, hi in zip(values, values[1:]):
            t = (lo + hi) / 2
            left = [y[i] for i in range(n) if X[i, f] <= t]
            right = [y[i] for i in range(n) if X[i, f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            dec = (parent - gini_sum(left) - gini_sum(right)) / n
            # strictly better only: earlier (feature, threshold) wins ties
            if best is None or dec > best[2] + 1e-12:
                best = (f, t, dec)
    return best


# -- scores --------------------------------------------------------------------

def mann_whitney(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def softmax_oracle(xs):
    e = [math.exp(v) for v in xs]
    return [v / sum(e) for v in e]

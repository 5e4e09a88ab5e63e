"""R-peak detection, HRV/GSR window features and the labeled feature matrix.

The registry holds 42 features (21 HRV, 21 GSR). The first six HRV and first
four GSR entries are the canonical ten retained by the reference pipeline;
the remaining 32 are common time/frequency statistics.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from ._parallel import parallel_map
from .cohort import TASKS, Trial, check_task
from .errors import ConfigurationError, InputError, InsufficientSignalError
from .signals import FilterSpec, Signal, apply_bandpass, apply_lowpass, window_bounds

REGISTRY_VERSION = "1"
TINN_BIN_MS = 7.8125
RR_MIN_MS, RR_MAX_MS = 200.0, 3000.0
REFRACTORY_S = 0.200
INTEGRATION_S = 0.150
THRESHOLD_MEMORY = 8


@dataclass(frozen=True, order=True)
class FeatureId:
    modality: str
    name: str

    def __str__(self):
        return f"{self.modality}_{self.name}"

    @classmethod
    def parse(cls, text: str) -> FeatureId:
        modality, _, name = text.partition("_")
        fid = cls(modality, name)
        if fid not in REGISTRY_INDEX:
            raise InputError(f"unknown feature {text!r}")
        return fid


HRV_NAMES = (
    "MAV", "Range", "SDNN", "RMSSD", "pNN50", "TINN",
    "MeanHR", "SDHR", "MinHR", "MaxHR", "MedianNN", "SDSD", "NN50", "pNN20",
    "CVNN", "CVSD", "IQRNN", "MADNN", "HTI", "MinNN", "MaxNN",
)
GSR_NAMES = (
    "MAV", "P2P", "VAR", "MeanFreq",
    "Mean", "Std", "Min", "Max", "Median", "IQR", "RMS", "Skew", "Kurtosis",
    "Slope", "MeanDiff", "MeanAbsDiff", "StdDiff", "MedianFreq", "PeakFreq",
    "SpectralEntropy", "PosDiffFraction",
)
HRV_IDS = tuple(FeatureId("HRV", n) for n in HRV_NAMES)
GSR_IDS = tuple(FeatureId("GSR", n) for n in GSR_NAMES)
CANONICAL = HRV_IDS[:6] + GSR_IDS[:4]
REGISTRY = HRV_IDS + GSR_IDS
REGISTRY_INDEX = {fid: i for i, fid in enumerate(REGISTRY)}


@dataclass(frozen=True)
class RRSeries:
    intervals_ms: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "intervals_ms", np.asarray(self.intervals_ms, dtype=np.float64))

    def __len__(self):
        return len(self.intervals_ms)


# -- ECG ---------------------------------------------------------------------

def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    # centered moving mean with zero padding
    c = np.concatenate(([0.0], np.cumsum(x)))
    half = width // 2
    idx = np.arange(x.size)
    lo = np.clip(idx - half, 0, x.size)
    hi = np.clip(idx - half + width, 0, x.size)
    return (c[hi] - c[lo]) / width


def detect_r_peaks(ecg: Signal) -> np.ndarray:
    """Locate R peaks in a band-passed ECG.

    Derivative, squaring and 150 ms moving-window integration produce an
    energy envelope; its local maxima are accepted against an adaptive
    threshold (half the mean of the last eight accepted heights) with a
    200 ms refractory period, then snapped to the ECG maximum nearby.

    Raises
    ------
    InsufficientSignalError
        If fewer than three peaks are found.
    """
    x = ecg.samples
    fs = ecg.fs
    if x.size < 2 * fs:
        raise InsufficientSignalError("ECG shorter than 2 s")
    if not np.all(np.isfinite(x)):
        raise InputError("ECG contains non-finite samples")
    width = max(1, int(round(INTEGRATION_S * fs)))
    refractory = int(math.ceil(REFRACTORY_S * fs))
    energy = _moving_average(np.gradient(x) ** 2, width)
    # local maxima, letting the first and last samples qualify
    padded = np.concatenate(([-np.inf], energy, [-np.inf]))
    inner = padded[1:-1]
    candidates = np.flatnonzero((inner > padded[:-2]) & (inner >= padded[2:]))
    # seed level: half the strongest envelope in the first 2 s, so one edge artifact
    # cannot lift the threshold above every later beat
    init = 0.5 * float(energy[: int(2 * fs)].max())
    if candidates.size == 0 or not init > 0:
        raise InsufficientSignalError("no QRS energy found")
    accepted = kernels.threshold_peaks(energy, candidates, refractory, init, THRESHOLD_MEMORY)

    peaks: list[int] = []
    for c in accepted:
        a, b = max(0, c - width), min(x.size, c + width + 1)
        r = a + int(np.argmax(x[a:b]))
        if peaks and r - peaks[-1] < refractory:
            if x[r] > x[peaks[-1]]:
                peaks[-1] = r
            continue
        peaks.append(r)
    if len(peaks) < 3:
        raise InsufficientSignalError(f"only {len(peaks)} R peaks detected")
    return np.asarray(peaks, dtype=np.intp)


def rr_from_peaks(peaks: Sequence[int], fs: float) -> RRSeries:
    """Successive R-R intervals in ms, keeping only those within (200, 3000) ms."""
    peaks = np.asarray(peaks, dtype=np.float64)
    if peaks.size < 3:
        raise InsufficientSignalError(f"need at least 3 peaks, got {peaks.size}")
    rr = np.diff(peaks) * 1000.0 / fs
    rr = rr[(rr > RR_MIN_MS) & (rr < RR_MAX_MS)]
    if rr.size < 2:
        raise InsufficientSignalError(f"{rr.size} RR interval(s) left after artifact gating")
    return RRSeries(rr)


def _quantile_sorted(s: list, q: float) -> float:
    # linear interpolation between order statistics (numpy's default method)
    pos = q * (len(s) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


def _hrv_row(rr: np.ndarray) -> list[float]:
    # plain-float arithmetic: windows hold only a handful of intervals
    vals = [float(v) for v in rr]
    n = len(vals)
    d = [b - a for a, b in zip(vals, vals[1:])]
    nd = len(d)
    ad = [abs(v) for v in d]
    mean = math.fsum(vals) / n
    sdnn = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / n)
    rmssd = math.sqrt(math.fsum(v * v for v in d) / nd)
    mean_d = math.fsum(d) / nd
    sdsd = math.sqrt(math.fsum((v - mean_d) ** 2 for v in d) / nd)
    hr = [60000.0 / v for v in vals]
    mean_hr = math.fsum(hr) / n
    sd_hr = math.sqrt(math.fsum((h - mean_hr) ** 2 for h in hr) / n)
    nn50 = float(sum(1 for v in ad if v > 50.0))
    nn20 = float(sum(1 for v in ad if v > 20.0))
    s = sorted(vals)
    q25, q50, q75 = (_quantile_sorted(s, q) for q in (0.25, 0.5, 0.75))
    mad = _quantile_sorted(sorted(abs(v - q50) for v in vals), 0.5)
    rr_min, rr_max = s[0], s[-1]
    e0 = math.floor(rr_min / TINN_BIN_MS) * TINN_BIN_MS
    counts: dict = {}
    for v in vals:
        b = math.floor((v - e0) / TINN_BIN_MS)
        counts[b] = counts.get(b, 0) + 1
    return [
        mean,
        rr_max - rr_min,
        sdnn,
        rmssd,
        100.0 * nn50 / nd,
        kernels.tinn(rr, TINN_BIN_MS),
        mean_hr,
        sd_hr,
        60000.0 / rr_max,
        60000.0 / rr_min,
        q50,
        sdsd,
        nn50,
        100.0 * nn20 / nd,
        sdnn / mean,
        rmssd / mean,
        q75 - q25,
        mad,
        n / max(counts.values()),
        rr_min,
        rr_max,
    ]


def hrv_features(rr: RRSeries | Sequence[float], extended: bool = True) -> dict[FeatureId, float]:
    """HRV statistics of one RR series (ms).

    SDNN and SDSD use the population (divide-by-n) convention; pNN50 counts
    successive differences strictly greater than 50 ms.
    """
    values = rr.intervals_ms if isinstance(rr, RRSeries) else np.asarray(rr, dtype=np.float64)
    if values.size < 2:
        raise InsufficientSignalError("HRV features need at least two RR intervals")
    row = _hrv_row(values)
    ids = HRV_IDS if extended else HRV_IDS[:6]
    return dict(zip(ids, row))


# -- GSR ---------------------------------------------------------------------

def _quantile_cols(xs: np.ndarray, q: float) -> np.ndarray:
    pos = q * (xs.shape[1] - 1)
    lo = int(pos)
    hi = min(lo + 1, xs.shape[1] - 1)
    return xs[:, lo] + (pos - lo) * (xs[:, hi] - xs[:, lo])


def gsr_block(windows: np.ndarray, fs: float) -> np.ndarray:
    """GSR features for a stack of equal-length windows, shape (n, 21)."""
    x = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    n, length = x.shape
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    c2 = centered * centered
    var = c2.mean(axis=1)
    std = np.sqrt(var)
    m3 = np.mean(c2 * centered, axis=1)
    m4 = np.mean(c2 * c2, axis=1)
    flat = var <= 0.0
    safe_var = np.where(flat, 1.0, var)
    skew = np.where(flat, 0.0, m3 / safe_var ** 1.5)
    kurt = np.where(flat, 0.0, m4 / safe_var ** 2 - 3.0)
    xs = np.sort(x, axis=1)
    mn, mx = xs[:, 0], xs[:, -1]
    q25, q50, q75 = (_quantile_cols(xs, q) for q in (0.25, 0.5, 0.75))

    t = np.arange(length) / fs
    tc = t - t.mean()
    denom = float(np.sum(tc * tc))
    slope = centered @ tc / denom if denom > 0 else np.zeros(n)

    if length > 1:
        dx = np.diff(x, axis=1) * fs
        mean_diff = dx.mean(axis=1)
        mean_abs_diff = np.abs(dx).mean(axis=1)
        std_diff = dx.std(axis=1)
        pos_frac = np.mean(dx > 0, axis=1)
    else:
        mean_diff = mean_abs_diff = std_diff = pos_frac = np.zeros(n)

    spec = np.fft.rfft(x, axis=1)
    power = spec.real * spec.real + spec.imag * spec.imag
    freqs = np.fft.rfftfreq(length, d=1.0 / fs)
    # one-sided periodogram: interior bins carry both signs, DC and Nyquist one
    p, f = power[:, 1:], freqs[1:]
    if length % 2 == 0 and f.size:
        p[:, -1] *= 0.5
    total = p.sum(axis=1)
    has_power = total > 0
    safe_total = np.where(has_power, total, 1.0)
    mean_freq = np.where(has_power, p @ f / safe_total, 0.0)
    if f.size:
        cum = np.cumsum(p, axis=1)
        median_idx = np.argmax(cum >= 0.5 * total[:, None], axis=1)
        median_freq = np.where(has_power, f[median_idx], 0.0)
        peak_freq = np.where(has_power, f[np.argmax(p, axis=1)], 0.0)
        prob = p / safe_total[:, None]
        ent = -np.sum(prob * np.log(np.where(prob > 0, prob, 1.0)), axis=1)
        entropy = np.where(has_power & (f.size > 1), ent / math.log(max(f.size, 2)), 0.0)
    else:
        median_freq = peak_freq = entropy = np.zeros(n)

    return np.column_stack([
        np.abs(x).mean(axis=1), mx - mn, var, mean_freq,
        mean, std, mn, mx, q50, q75 - q25, np.sqrt(np.mean(x * x, axis=1)), skew, kurt,
        slope, mean_diff, mean_abs_diff, std_diff, median_freq, peak_freq,
        entropy, pos_frac,
    ])


def gsr_features(window: Signal, extended: bool = True) -> dict[FeatureId, float]:
    """GSR statistics of one window.

    VAR is the population variance; MeanFreq is the power-weighted mean
    frequency of the one-sided periodogram with the DC bin excluded.
    """
    if len(window) == 0:
        raise InputError("GSR window is empty")
    row = gsr_block(window.samples[None, :], window.fs)[0]
    ids = GSR_IDS if extended else GSR_IDS[:4]
    return {fid: float(v) for fid, v in zip(ids, row)}


# -- Feature matrix ----------------------------------------------------------

@dataclass(eq=False)
class FeatureMatrix:
    """Window-level feature rows with provenance and both task labels."""

    values: np.ndarray
    feature_ids: tuple[FeatureId, ...]
    subject_ids: np.ndarray
    video_ids: np.ndarray
    window_index: np.ndarray
    arousal: np.ndarray
    valence: np.ndarray
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1, len(self.feature_ids))
        self.subject_ids = np.asarray(self.subject_ids, dtype=object)
        self.video_ids = np.asarray(self.video_ids, dtype=object)
        self.window_index = np.asarray(self.window_index, dtype=np.int64)
        self.arousal = np.asarray(self.arousal, dtype=np.int8)
        self.valence = np.asarray(self.valence, dtype=np.int8)
        n = self.values.shape[0]
        for name in ("subject_ids", "video_ids", "window_index", "arousal", "valence"):
            if len(getattr(self, name)) != n:
                raise InputError(f"feature matrix column {name} has wrong length")

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (self.feature_ids == other.feature_ids
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.subject_ids, other.subject_ids)
                and np.array_equal(self.video_ids, other.video_ids)
                and np.array_equal(self.window_index, other.window_index)
                and np.array_equal(self.arousal, other.arousal)
                and np.array_equal(self.valence, other.valence))

    def labels(self, task: str) -> np.ndarray:
        return getattr(self, check_task(task))

    def subjects(self) -> list[str]:
        """Subject ids in order of first appearance."""
        return list(dict.fromkeys(self.subject_ids.tolist()))

    def take(self, rows) -> FeatureMatrix:
        rows = np.asarray(rows)
        return FeatureMatrix(self.values[rows], self.feature_ids, self.subject_ids[rows],
                             self.video_ids[rows], self.window_index[rows],
                             self.arousal[rows], self.valence[rows])

    def for_subject(self, subject_id: str) -> FeatureMatrix:
        return self.take(self.subject_ids == subject_id)

    def without_subject(self, subject_id: str) -> FeatureMatrix:
        return self.take(self.subject_ids != subject_id)

    def columns(self, feature_ids: Iterable[FeatureId]) -> np.ndarray:
        pos = {fid: i for i, fid in enumerate(self.feature_ids)}
        return self.values[:, [pos[f] for f in feature_ids]]


@dataclass(frozen=True)
class ExtractConfig:
    window_s: float = 5.0
    shift_s: float = 5.0
    ecg_filter: FilterSpec = field(default_factory=FilterSpec.ecg_default)
    gsr_filter: FilterSpec = field(default_factory=FilterSpec.gsr_default)
    extended: bool = True

    def __post_init__(self):
        if not (self.window_s > 0 and self.shift_s > 0):
            raise ConfigurationError("window and shift must be positive")
        if self.ecg_filter.kind != "band_pass" or self.gsr_filter.kind != "low_pass":
            raise ConfigurationError("ECG needs a band_pass filter and GSR a low_pass filter")

    @property
    def feature_ids(self) -> tuple[FeatureId, ...]:
        return REGISTRY if self.extended else CANONICAL


@dataclass(frozen=True)
class SkipRecord:
    subject_id: str
    video_id: str
    valid_windows: int
    total_windows: int
    reason: str


def _trial_rows(trial: Trial, config: ExtractConfig):
    ecg = apply_bandpass(trial.ecg, config.ecg_filter)
    gsr = apply_lowpass(trial.gsr, config.gsr_filter)
    ecg_bounds = window_bounds(len(ecg), ecg.fs, config.window_s, config.shift_s)
    gsr_bounds = window_bounds(len(gsr), gsr.fs, config.window_s, config.shift_s)
    n_win = min(len(ecg_bounds), len(gsr_bounds))
    if n_win == 0:
        return [], [], SkipRecord(trial.subject_id, trial.video_id, 0, 0, "shorter than one window")
    try:
        peaks = detect_r_peaks(ecg)
    except InsufficientSignalError as exc:
        return [], [], SkipRecord(trial.subject_id, trial.video_id, 0, n_win, str(exc))

    gsr_windows = np.stack([gsr.samples[a:b] for a, b in gsr_bounds[:n_win]])
    gsr_all = gsr_block(gsr_windows, gsr.fs)
    if not config.extended:
        gsr_all = gsr_all[:, :4]
    rows, kept = [], []
    reason = ""
    for k, (a, b) in enumerate(ecg_bounds[:n_win]):
        lo, hi = np.searchsorted(peaks, [a, b])
        try:
            rr = rr_from_peaks(peaks[lo:hi], ecg.fs)
        except InsufficientSignalError as exc:
            reason = str(exc)
            continue
        hrv = _hrv_row(rr.intervals_ms)
        if not config.extended:
            hrv = hrv[:6]
        row = np.concatenate([hrv, gsr_all[k]])
        if not np.all(np.isfinite(row)):
            reason = "non-finite feature value"
            continue
        rows.append(row)
        kept.append(k)
    skip = None
    if len(kept) < n_win:
        skip = SkipRecord(trial.subject_id, trial.video_id, len(kept), n_win,
                          reason or "invalid windows")
    return rows, kept, skip


def _extract_one(args):
    trial, config = args
    return _trial_rows(trial, config)


def extract_matrix(trials: Sequence[Trial], config: ExtractConfig | None = None,
                   jobs: int = 1) -> FeatureMatrix:
    """Window the trials and compute one feature row per valid window.

    Rows are ordered by (subject, video, window) in input order. Trials that
    lose windows are listed in ``matrix.skipped``.
    """
    config = config or ExtractConfig()
    results = parallel_map(_extract_one, [(t, config) for t in trials], jobs)
    values, sids, vids, widx, aro, val, skipped = [], [], [], [], [], [], []
    for trial, (rows, kept, skip) in zip(trials, results):
        values.extend(rows)
        sids.extend([trial.subject_id] * len(kept))
        vids.extend([trial.video_id] * len(kept))
        widx.extend(kept)
        aro.extend([trial.arousal] * len(kept))
        val.extend([trial.valence] * len(kept))
        if skip is not None:
            skipped.append(skip)
    ids = config.feature_ids
    matrix = FeatureMatrix(np.array(values, dtype=np.float64).reshape(-1, len(ids)), ids,
                           sids, vids, widx, aro, val)
    matrix.skipped = skipped
    return matrix


def normalize_per_subject(matrix: FeatureMatrix) -> FeatureMatrix:
    """Min-max scale every feature to [0, 1] within each subject; constant columns map to 0."""
    if len(matrix) == 0:
        raise InputError("cannot normalize an empty feature matrix")
    out = np.empty_like(matrix.values)
    for sid in matrix.subjects():
        rows = matrix.subject_ids == sid
        block = matrix.values[rows]
        lo = block.min(axis=0)
        span = block.max(axis=0) - lo
        safe = np.where(span > 0, span, 1.0)
        out[rows] = np.where(span > 0, (block - lo) / safe, 0.0)
    result = FeatureMatrix(out, matrix.feature_ids, matrix.subject_ids, matrix.video_ids,
                           matrix.window_index, matrix.arousal, matrix.valence)
    result.skipped = list(matrix.skipped)
    return result


# -- Files -------------------------------------------------------------------

def write_feature_csv(matrix: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "video_id", "window_index",
                    *[str(f) for f in matrix.feature_ids], "arousal", "valence"])
        for i in range(len(matrix)):
            w.writerow([matrix.subject_ids[i], matrix.video_ids[i], int(matrix.window_index[i]),
                        *[repr(float(v)) for v in matrix.values[i]],
                        int(matrix.arousal[i]), int(matrix.valence[i])])


def read_feature_csv(path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["subject_id", "video_id", "window_index"] or header[-2:] != TASKS_HEADER:
            raise InputError(f"{path}: not a feature CSV")
        ids = tuple(FeatureId.parse(h) for h in header[3:-2])
        rows = list(reader)
    values = np.array([[float(v) for v in r[3:-2]] for r in rows], dtype=np.float64)
    return FeatureMatrix(values.reshape(-1, len(ids)), ids, [r[0] for r in rows],
                         [r[1] for r in rows], [int(r[2]) for r in rows],
                         [int(r[-2]) for r in rows], [int(r[-1]) for r in rows])


TASKS_HEADER = list(TASKS)


def write_skip_report(skipped: Sequence[SkipRecord], path) -> None:
    with open(Path(path), "w") as fh:
        fh.write("# subject_id,video_id,valid_windows,total_windows,reason\n")
        for s in skipped:
            fh.write(f"{s.subject_id},{s.video_id},{s.valid_windows},{s.total_windows},{s.reason}\n")

"""Zero-phase Butterworth filtering and fixed-length windowing of ECG/GSR."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import ConfigurationError, IngestionError, InputError

# GSR low-pass and ECG band-pass defaults.
GSR_CUTOFF_HZ = 0.2
ECG_BAND_HZ = (0.67, 40.0)
DEFAULT_ORDER = 4


@dataclass(frozen=True, eq=False)
class Signal:
    """A uniformly sampled 1-D recording."""

    samples: np.ndarray
    sampling_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise InputError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise InputError("signal samples must be one-dimensional")
        object.__setattr__(self, "samples", arr)

    @property
    def fs(self) -> float:
        return self.sampling_rate_hz

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sampling_rate_hz

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return (self.sampling_rate_hz == other.sampling_rate_hz
                and self.start_time_s == other.start_time_s
                and np.array_equal(self.samples, other.samples))

    def replace_samples(self, samples) -> Signal:
        return Signal(samples, self.sampling_rate_hz, self.start_time_s)


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    order: int = DEFAULT_ORDER
    cutoff_low_hz: float = GSR_CUTOFF_HZ
    cutoff_high_hz: float | None = None

    def __post_init__(self):
        if self.kind not in ("low_pass", "band_pass"):
            raise ConfigurationError(f"unknown filter kind {self.kind!r}")
        if int(self.order) != self.order or self.order < 1:
            raise ConfigurationError(f"filter order must be a positive integer, got {self.order}")
        if self.cutoff_low_hz < 0:
            raise ConfigurationError("cutoff frequencies must be non-negative")
        if self.kind == "band_pass":
            if self.cutoff_high_hz is None or not self.cutoff_high_hz > self.cutoff_low_hz:
                raise ConfigurationError(
                    f"band-pass needs cutoff_high_hz > cutoff_low_hz, got "
                    f"{self.cutoff_low_hz}..{self.cutoff_high_hz}")

    @classmethod
    def gsr_default(cls) -> FilterSpec:
        return cls("low_pass", DEFAULT_ORDER, GSR_CUTOFF_HZ)

    @classmethod
    def ecg_default(cls) -> FilterSpec:
        return cls("band_pass", DEFAULT_ORDER, *ECG_BAND_HZ)


def _checked_samples(sig: Signal) -> np.ndarray:
    x = sig.samples
    if x.size == 0:
        raise InputError("cannot filter an empty signal")
    if not np.all(np.isfinite(x)):
        raise InputError("signal contains NaN or infinite samples")
    return x


def _filtfilt(sos: np.ndarray, x: np.ndarray, total_order: int) -> np.ndarray:
    # reflect-pad by 3x the filter order, clipped for very short inputs
    padlen = min(3 * total_order, x.size - 1)
    return sps.sosfiltfilt(sos, x, padtype="even" if padlen > 0 else None, padlen=padlen)


@lru_cache(maxsize=64)
def _butter_sos(order: int, cutoffs: tuple, btype: str, fs: float) -> np.ndarray:
    sos = sps.butter(order, list(cutoffs) if len(cutoffs) > 1 else cutoffs[0], btype=btype,
                     fs=fs, output="sos")
    sos.setflags(write=False)
    return sos


def lowpass_sos(spec: FilterSpec, fs: float) -> np.ndarray:
    nyq = fs / 2.0
    if not 0 < spec.cutoff_low_hz < nyq:
        raise ConfigurationError(
            f"low-pass cutoff {spec.cutoff_low_hz} Hz must lie in (0, Nyquist={nyq} Hz)")
    return _butter_sos(spec.order, (spec.cutoff_low_hz,), "lowpass", float(fs)).copy()


def bandpass_sos(spec: FilterSpec, fs: float) -> np.ndarray:
    nyq = fs / 2.0
    lo, hi = spec.cutoff_low_hz, spec.cutoff_high_hz
    if hi is None or not 0 < lo < hi < nyq:
        raise ConfigurationError(
            f"band-pass cutoffs must satisfy 0 < {lo} < {hi} < Nyquist={nyq} Hz")
    return _butter_sos(spec.order, (lo, hi), "bandpass", float(fs)).copy()


def apply_lowpass(sig: Signal, spec: FilterSpec | None = None) -> Signal:
    """Order-``spec.order`` Butterworth low-pass, run forward and backward."""
    spec = spec or FilterSpec.gsr_default()
    if spec.kind != "low_pass":
        raise ConfigurationError(f"apply_lowpass needs a low_pass spec, got {spec.kind}")
    x = _checked_samples(sig)
    sos = lowpass_sos(spec, sig.fs)
    return sig.replace_samples(_filtfilt(sos, x, spec.order))


def apply_bandpass(sig: Signal, spec: FilterSpec | None = None) -> Signal:
    """Butterworth band-pass (``spec.order`` per edge), zero phase."""
    spec = spec or FilterSpec.ecg_default()
    if spec.kind != "band_pass":
        raise ConfigurationError(f"apply_bandpass needs a band_pass spec, got {spec.kind}")
    x = _checked_samples(sig)
    sos = bandpass_sos(spec, sig.fs)
    return sig.replace_samples(_filtfilt(sos, x, 2 * spec.order))


def magnitude_response(spec: FilterSpec, fs: float, freqs) -> np.ndarray:
    """Analytic single-pass |H(f)| of the bilinear Butterworth design.

    Uses the pre-warped analog prototype, so it is exact for the digital
    filter (not an approximation of it). Forward-backward filtering squares it.
    """
    f = np.asarray(freqs, dtype=np.float64)
    warp = np.tan(np.pi * f / fs)
    n = spec.order
    if spec.kind == "low_pass":
        wc = math.tan(math.pi * spec.cutoff_low_hz / fs)
        return 1.0 / np.sqrt(1.0 + (warp / wc) ** (2 * n))
    wl = math.tan(math.pi * spec.cutoff_low_hz / fs)
    wh = math.tan(math.pi * spec.cutoff_high_hz / fs)
    with np.errstate(divide="ignore"):
        ratio = (warp ** 2 - wl * wh) / (warp * (wh - wl))
    return 1.0 / np.sqrt(1.0 + ratio ** (2 * n))


def window_count(duration_s: float, window_s: float, shift_s: float) -> int:
    if duration_s + 1e-9 < window_s:
        return 0
    return int(math.floor((duration_s - window_s) / shift_s + 1e-9)) + 1


def window_bounds(n_samples: int, fs: float, window_s: float = 5.0,
                  shift_s: float = 5.0) -> list[tuple[int, int]]:
    """Sample ranges ``[start, stop)`` of the complete windows of a recording."""
    if window_s <= 0 or shift_s <= 0:
        raise ConfigurationError("window and shift lengths must be positive")
    wlen = int(round(window_s * fs))
    out = []
    for k in range(window_count(n_samples / fs, window_s, shift_s)):
        start = int(round(k * shift_s * fs))
        if start + wlen > n_samples:
            break
        out.append((start, start + wlen))
    return out


def segment_windows(sig: Signal, window_s: float = 5.0, shift_s: float = 5.0) -> list[Signal]:
    """Cut ``sig`` into fixed windows; a trailing partial window is dropped.

    A recording shorter than one window yields an empty list.
    """
    return [
        Signal(sig.samples[a:b], sig.fs, sig.start_time_s + a / sig.fs)
        for a, b in window_bounds(len(sig), sig.fs, window_s, shift_s)
    ]


def read_signal_csv(path) -> Signal:
    """Read a ``t_seconds,value`` file, inferring and validating the sampling rate."""
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if header.replace(" ", "") != "t_seconds,value":
                raise IngestionError(f"{path}: expected header 't_seconds,value', got {header!r}")
            data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
    except OSError as exc:
        raise IngestionError(f"{path}: cannot read signal file ({exc})") from exc
    except ValueError as exc:
        raise IngestionError(f"{path}: malformed signal file ({exc})") from exc
    if data.shape[0] < 2 or data.shape[1] != 2:
        raise IngestionError(f"{path}: need at least two rows of 't_seconds,value'")
    t, v = data[:, 0], data[:, 1]
    step = t[1] - t[0]
    if not step > 0:
        raise IngestionError(f"{path}: time column must increase")
    fs = round(1.0 / step, 6)
    expected = t[0] + np.arange(len(t)) / fs
    bad = np.flatnonzero(np.abs(t - expected) > 1e-6)
    if bad.size:
        raise IngestionError(
            f"{path}: non-uniform sampling at row {int(bad[0]) + 2} "
            f"(t={t[bad[0]]!r}, expected {expected[bad[0]]!r})")
    if not np.all(np.isfinite(v)):
        raise IngestionError(f"{path}: non-finite sample values")
    return Signal(v, fs, float(t[0]))


def write_signal_csv(sig: Signal, path) -> None:
    t = sig.start_time_s + np.arange(len(sig)) / sig.fs
    with open(path, "w") as fh:
        fh.write("t_seconds,value\n")
        fh.writelines(f"{a!r},{b!r}\n" for a, b in zip(t.tolist(), sig.samples.tolist()))

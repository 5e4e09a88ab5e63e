"""Seeded synthetic ECG/GSR cohorts with tunable personality-response coupling.

Each subject has a response style per task: a 4-vector saying how strongly
(and in which direction) a high label moves four physiological channels:
heart-rate level, HRV amplitude, phasic SCR rate and tonic skin conductance.
The style is ``rho * W @ traits + (1 - rho) * noise``. ``W`` spans the trait
directions orthogonal to the all-ones vector, so at ``rho = 1`` subjects with
similar trait profiles respond alike, and at ``rho = 0`` traits carry no
information about responses.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .cohort import TASKS, TRAIT_NAMES, PersonalityTraits, Subject, Trial
from .errors import ConfigurationError
from .signals import Signal, write_signal_csv

N_CHANNELS = 4
CHANNELS = ("heart_rate", "hrv_amplitude", "scr_rate", "tonic_level")

# Orthonormal basis of the complement of (1,1,1,1,1); one 4x5 block per task.
_H = np.array([
    [1, -1, 0, 0, 0],
    [1, 1, -2, 0, 0],
    [1, 1, 1, -3, 0],
    [1, 1, 1, 1, -4],
], dtype=np.float64)
_BASIS = _H / np.linalg.norm(_H, axis=1, keepdims=True)
_ROT = np.array([[0, 0, 1, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 1, 0, 0]], dtype=np.float64)
MIXING = {"arousal": _BASIS, "valence": _ROT @ _BASIS}
# a uniform trait on [1, 7] has standard deviation sqrt(3)
_TRAIT_SD = math.sqrt(3.0)

# channels carrying the population-level response shared by every subject
COMMON_RESPONSE = {
    "arousal": np.array([1.0, 0.0, 1.0, 0.0]),
    "valence": np.array([0.0, 1.0, 0.0, 1.0]),
}


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 48
    n_videos: int = 36
    trial_seconds: float = 60.0
    fs_ecg: float = 256.0
    fs_gsr: float = 128.0
    coupling: float = 0.9
    noise_sd: float = 0.05
    seed: int = 0
    common_gain: float = 0.25
    response_gain: float = 1.0
    trial_jitter: float = 0.6

    def __post_init__(self):
        if self.n_subjects < 1 or self.n_videos < 1:
            raise ConfigurationError("need at least one subject and one video")
        if not 0.0 <= self.coupling <= 1.0:
            raise ConfigurationError(f"coupling must lie in [0, 1], got {self.coupling}")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be non-negative")
        if self.trial_seconds <= 0 or self.fs_ecg <= 0 or self.fs_gsr <= 0:
            raise ConfigurationError("durations and sampling rates must be positive")


@dataclass
class SubjectTruth:
    subject_id: str
    traits: list
    style: dict
    hr_base_bpm: float
    tonic_base_us: float
    beats: dict = field(default_factory=dict, repr=False)


@dataclass
class GroundTruth:
    config: SynthConfig
    mixing: dict
    base_rates: dict
    subjects: list

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "channels": list(CHANNELS),
            "mixing": {t: m.tolist() for t, m in self.mixing.items()},
            "common_response": {t: (self.config.common_gain * v).tolist()
                                for t, v in COMMON_RESPONSE.items()},
            "base_rates": {t: list(v) for t, v in self.base_rates.items()},
            "subjects": [
                {"subject_id": s.subject_id, "traits": s.traits,
                 "style": {t: list(v) for t, v in s.style.items()},
                 "hr_base_bpm": s.hr_base_bpm, "tonic_base_us": s.tonic_base_us}
                for s in self.subjects
            ],
        }


def response_style(traits: np.ndarray, coupling: float, noise: np.ndarray, task: str) -> np.ndarray:
    """``coupling * W @ (traits - 4) / sd + (1 - coupling) * noise`` for one task."""
    driven = MIXING[task] @ (np.asarray(traits, dtype=np.float64) - 4.0) / _TRAIT_SD
    return coupling * driven + (1.0 - coupling) * np.asarray(noise, dtype=np.float64)


def _subject_ids(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"S{i + 1:0{width}d}" for i in range(n)]


def _video_ids(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"V{i + 1:0{width}d}" for i in range(n)]


def _draw_labels(rng, n_subjects, n_videos):
    # video base rates; redrawn until each task's positive rate is within [0.35, 0.65]
    for _ in range(1000):
        rates = {t: rng.uniform(0.2, 0.8, size=n_videos) for t in TASKS}
        labels = {t: (rng.random((n_subjects, n_videos)) < rates[t][None, :]).astype(int)
                  for t in TASKS}
        if all(0.35 <= labels[t].mean() <= 0.65 for t in TASKS):
            return rates, labels
    raise ConfigurationError("could not draw balanced labels")


def _qrs_template(fs: float) -> np.ndarray:
    t = np.arange(-0.25, 0.45, 1.0 / fs)
    r = 1.0 * np.exp(-0.5 * (t / 0.010) ** 2)
    q = -0.12 * np.exp(-0.5 * ((t + 0.025) / 0.008) ** 2)
    s = -0.20 * np.exp(-0.5 * ((t - 0.028) / 0.010) ** 2)
    p = 0.10 * np.exp(-0.5 * ((t + 0.16) / 0.025) ** 2)
    tw = 0.28 * np.exp(-0.5 * ((t - 0.26) / 0.045) ** 2)
    return p + q + r + s + tw


def _place(positions, amplitudes, kernel, center, n):
    """Sum of ``amplitude * kernel`` copies with ``kernel[center]`` at each position."""
    out = np.zeros(n)
    for p, a in zip(positions, amplitudes):
        k0 = p - center
        lo, hi = max(0, k0), min(n, k0 + kernel.size)
        if lo < hi:
            out[lo:hi] += a * kernel[lo - k0:hi - k0]
    return out


def _ecg(rng, duration, fs, hr_bpm, hrv_frac, noise_sd):
    """Impulse train at the beat times, smoothed by a P-QRS-T template."""
    mean_rr = 60.0 / hr_bpm
    n_beats = int(duration / mean_rr) + 3
    eps = rng.normal(size=n_beats)
    # AR(1) beat-to-beat variability with unit stationary variance
    ar = sps.lfilter([0.8], [1.0, -0.6], eps)
    ar[0] = eps[0]
    phase = rng.uniform(0, 2 * np.pi)
    t_beat = np.cumsum(np.full(n_beats, mean_rr))
    rsa = np.sin(2 * np.pi * 0.25 * t_beat + phase)
    rr = mean_rr * (1.0 + hrv_frac * (0.7 * ar + 0.7 * rsa))
    rr = np.clip(rr, 0.33, 2.0)
    times = rng.uniform(0.2, 0.2 + mean_rr) + np.concatenate(([0.0], np.cumsum(rr[:-1])))
    n = int(round(duration * fs))
    idx = np.round(times * fs).astype(np.intp)
    idx = idx[idx < n - 1]
    wave = _place(idx, np.ones(idx.size), _qrs_template(fs), int(round(0.25 * fs)), n)
    t = np.arange(n) / fs
    wander = 0.08 * np.sin(2 * np.pi * rng.uniform(0.1, 0.3) * t + rng.uniform(0, 2 * np.pi))
    return wave + wander + noise_sd * rng.normal(size=n), idx


def _gsr(rng, duration, fs, tonic, scr_per_min, scr_amp, noise_sd):
    """Tonic level with slow drift plus Poisson skin-conductance responses."""
    n = int(round(duration * fs))
    drift = np.cumsum(rng.normal(scale=0.02 / math.sqrt(fs), size=n))
    n_events = rng.poisson(scr_per_min * duration / 60.0)
    onsets = np.sort(rng.uniform(-5.0, duration, size=n_events))
    amps = rng.exponential(scr_amp, size=n_events)
    kt = np.arange(0, 20.0, 1.0 / fs)
    kernel = (1.0 - np.exp(-kt / 0.75)) * np.exp(-kt / 2.5)
    kernel /= kernel.max()
    phasic = _place(np.round(onsets * fs).astype(np.intp), amps, kernel, 0, n)
    return tonic + drift + phasic + 0.2 * noise_sd * rng.normal(size=n)


def generate_cohort(config: SynthConfig | None = None) -> tuple[list[Subject], GroundTruth]:
    """Generate subjects with traits, labeled trials and raw ECG/GSR signals."""
    config = config or SynthConfig()
    root = np.random.SeedSequence(config.seed)
    master_seq, *subject_seqs = root.spawn(config.n_subjects + 1)
    rng = np.random.default_rng(master_seq)

    traits = rng.uniform(1.0, 7.0, size=(config.n_subjects, 5))
    noise = {t: rng.normal(size=(config.n_subjects, N_CHANNELS)) for t in TASKS}
    rates, labels = _draw_labels(rng, config.n_subjects, config.n_videos)
    hr_base = rng.uniform(62.0, 82.0, size=config.n_subjects)
    tonic_base = rng.uniform(2.0, 8.0, size=config.n_subjects)

    sids = _subject_ids(config.n_subjects)
    vids = _video_ids(config.n_videos)
    subjects, truths = [], []
    for i, sid in enumerate(sids):
        srng = np.random.default_rng(subject_seqs[i])
        style = {t: response_style(traits[i], config.coupling, noise[t][i], t) for t in TASKS}
        gain = {t: config.common_gain * COMMON_RESPONSE[t] + config.response_gain * style[t]
                for t in TASKS}
        pt = PersonalityTraits.from_sequence(traits[i])
        truth = SubjectTruth(sid, traits[i].tolist(), style, float(hr_base[i]), float(tonic_base[i]))
        trials = []
        for v, vid in enumerate(vids):
            y = {t: int(labels[t][i, v]) for t in TASKS}
            z = sum(gain[t] * (2 * y[t] - 1) for t in TASKS)
            z = z + config.trial_jitter * srng.normal(size=N_CHANNELS)
            hr = float(np.clip(hr_base[i] + 5.0 * z[0], 45.0, 140.0))
            hrv_frac = 0.035 * math.exp(0.35 * z[1])
            scr_rate = 3.0 * math.exp(0.45 * z[2])
            tonic = max(0.5, tonic_base[i] + 0.6 * z[3])
            ecg, beats = _ecg(srng, config.trial_seconds, config.fs_ecg, hr, hrv_frac,
                              config.noise_sd)
            gsr = _gsr(srng, config.trial_seconds, config.fs_gsr, tonic, scr_rate, 0.3,
                       config.noise_sd)
            truth.beats[vid] = beats
            trials.append(Trial(sid, vid, Signal(ecg, config.fs_ecg), Signal(gsr, config.fs_gsr),
                                y["arousal"], y["valence"]))
        subjects.append(Subject(sid, pt, trials))
        truths.append(truth)
    return subjects, GroundTruth(config, MIXING, {t: rates[t].tolist() for t in TASKS}, truths)


def write_dataset(subjects, root, truth: GroundTruth | None = None) -> Path:
    """Write the on-disk dataset layout read by :func:`apex_emotion.dataset.ingest`."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "personality.csv", "w") as fh:
        fh.write("subject_id," + ",".join(TRAIT_NAMES) + "\n")
        for s in subjects:
            fh.write(s.subject_id + "," + ",".join(repr(v) for v in s.traits.as_array().tolist())
                     + "\n")
    with open(root / "trials.csv", "w") as fh:
        fh.write("subject_id,video_id,arousal,valence\n")
        for s in subjects:
            for tr in s.trials:
                fh.write(f"{s.subject_id},{tr.video_id},{tr.arousal},{tr.valence}\n")
    for s in subjects:
        d = root / f"subject_{s.subject_id}"
        d.mkdir(exist_ok=True)
        for tr in s.trials:
            write_signal_csv(tr.ecg, d / f"ecg_{tr.video_id}.csv")
            write_signal_csv(tr.gsr, d / f"gsr_{tr.video_id}.csv")
    if truth is not None:
        (root / "ground_truth.json").write_text(json.dumps(truth.to_dict(), indent=1))
    return root

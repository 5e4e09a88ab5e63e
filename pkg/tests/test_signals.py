import numpy as np
import pytest
from hypothesis import given, strategies as st

from scipy import signal as sps

from apex_emotion.errors import ConfigurationError, IngestionError, InputError
from apex_emotion.signals import (FilterSpec, Signal, apply_bandpass, apply_lowpass,
                                  bandpass_sos, lowpass_sos, magnitude_response, read_signal_csv,
                                  segment_windows, window_bounds, window_count, write_signal_csv)

from oracles import analytic_bandpass, analytic_lowpass, steady_amplitude


def test_lowpass_passband_and_stopband():
    spec = FilterSpec.gsr_default()
    assert steady_amplitude(apply_lowpass, spec, 0.05, 128.0, 400) > 0.99
    assert steady_amplitude(apply_lowpass, spec, 1.0, 128.0, 120) < 0.01


def test_bandpass_passband_and_stopband():
    spec = FilterSpec.ecg_default()
    assert steady_amplitude(apply_bandpass, spec, 10.0, 256.0, 30) > 0.95
    assert steady_amplitude(apply_bandpass, spec, 0.1, 256.0, 400) < 0.1


@pytest.mark.parametrize("f", [0.01, 0.05, 0.1, 0.2, 0.3, 1.0, 5.0])
def test_lowpass_design_matches_analytic_magnitude(f):
    spec = FilterSpec.gsr_default()
    _, h = sps.sosfreqz(lowpass_sos(spec, 128.0), worN=[f], fs=128.0)
    expected = analytic_lowpass(f, 0.2, 128.0, 4)
    assert abs(h[0]) == pytest.approx(expected, rel=1e-6, abs=1e-12)
    assert magnitude_response(spec, 128.0, [f])[0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("f", [0.1, 0.67, 2.0, 10.0, 40.0, 80.0])
def test_bandpass_design_matches_analytic_magnitude(f):
    spec = FilterSpec.ecg_default()
    _, h = sps.sosfreqz(bandpass_sos(spec, 256.0), worN=[f], fs=256.0)
    expected = analytic_bandpass(f, 0.67, 40.0, 256.0, 4)
    assert abs(h[0]) == pytest.approx(expected, rel=1e-6, abs=1e-12)
    assert magnitude_response(spec, 256.0, [f])[0] == pytest.approx(expected, rel=1e-12)


def test_lowpass_dc_gain_is_one():
    out = apply_lowpass(Signal(np.full(128 * 120, 3.5), 128.0)).samples
    assert np.max(np.abs(out[128 * 20:-128 * 20] - 3.5)) < 1e-6


def test_bandpass_removes_dc():
    out = apply_bandpass(Signal(np.full(256 * 60, 2.0), 256.0)).samples
    assert np.max(np.abs(out[256 * 20:-256 * 20])) < 1e-3 * 2.0


def test_zero_phase_pulse_peak_stays_put():
    fs = 256.0
    t = np.arange(int(20 * fs)) / fs
    pulse = np.exp(-0.5 * ((t - 10.0) / 0.05) ** 2)
    out = apply_bandpass(Signal(pulse, fs)).samples
    assert abs(int(np.argmax(out)) - int(np.argmax(pulse))) <= 1
    gsr_pulse = np.exp(-0.5 * ((t - 10.0) / 2.0) ** 2)
    out = apply_lowpass(Signal(gsr_pulse, fs)).samples
    assert abs(int(np.argmax(out)) - int(np.argmax(gsr_pulse))) <= 1


@given(st.integers(0, 2 ** 31 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_filters_are_linear_and_length_preserving(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=600), rng.normal(size=600)
    for fn, spec, fs in ((apply_lowpass, FilterSpec.gsr_default(), 128.0),
                         (apply_bandpass, FilterSpec.ecg_default(), 256.0)):
        fx = fn(Signal(x, fs), spec).samples
        fy = fn(Signal(y, fs), spec).samples
        fxy = fn(Signal(a * x + b * y, fs), spec).samples
        assert fxy.shape == x.shape
        scale = max(1.0, np.max(np.abs(a * fx + b * fy)))
        assert np.max(np.abs(fxy - (a * fx + b * fy))) <= 1e-9 * scale


def test_filter_configuration_errors():
    with pytest.raises(ConfigurationError):
        apply_lowpass(Signal(np.ones(100), 0.3), FilterSpec("low_pass", 4, 0.2))
    with pytest.raises(ConfigurationError):
        FilterSpec("band_pass", 4, 40.0, 0.67)
    with pytest.raises(ConfigurationError):
        apply_bandpass(Signal(np.ones(1000), 64.0), FilterSpec("band_pass", 4, 0.67, 40.0))
    with pytest.raises(ConfigurationError):
        FilterSpec("high_pass", 4, 1.0)
    with pytest.raises(ConfigurationError):
        FilterSpec("low_pass", 0, 1.0)


def test_signal_rejects_bad_samples():
    with pytest.raises(InputError):
        apply_lowpass(Signal(np.array([1.0, np.nan, 2.0]), 128.0))
    with pytest.raises(InputError):
        apply_lowpass(Signal(np.array([]), 128.0))
    with pytest.raises(InputError):
        Signal(np.ones(5), 0.0)


@pytest.mark.parametrize("duration,expected", [(60, 12), (36, 7), (4, 0), (5, 1)])
def test_segment_window_counts(duration, expected):
    fs = 128.0
    sig = Signal(np.arange(int(duration * fs), dtype=float), fs)
    wins = segment_windows(sig, 5.0, 5.0)
    assert len(wins) == expected
    assert all(len(w) == 640 for w in wins)
    if wins:
        assert wins[1 if expected > 1 else 0].start_time_s == pytest.approx(5.0 if expected > 1 else 0.0)


def brute_window_count(duration, window, shift):
    k = 0
    while k * shift + window <= duration + 1e-9:
        k += 1
    return k


@given(st.integers(1, 400), st.integers(1, 40), st.integers(1, 40))
def test_window_count_matches_enumeration(d4, w4, s4):
    # quarter-second grid keeps the brute-force comparison exact
    duration, window, shift = d4 / 4, w4 / 4, s4 / 4
    assert window_count(duration, window, shift) == brute_window_count(duration, window, shift)
    bounds = window_bounds(int(duration * 128), 128.0, window, shift)
    assert len(bounds) == brute_window_count(duration, window, shift)
    assert all(b - a == int(window * 128) for a, b in bounds)


def test_signal_csv_round_trip(tmp_path, rng):
    sig = Signal(rng.normal(size=300), 128.0)
    write_signal_csv(sig, tmp_path / "s.csv")
    back = read_signal_csv(tmp_path / "s.csv")
    assert back == sig
    assert back.fs == 128.0


def test_signal_csv_rejects_nonuniform_time(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_seconds,value\n0,1\n0.1,2\n0.25,3\n")
    with pytest.raises(IngestionError, match="bad.csv"):
        read_signal_csv(path)

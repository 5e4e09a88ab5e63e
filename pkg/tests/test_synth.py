import numpy as np
import pytest

from apex_emotion.errors import ConfigurationError
from apex_emotion.features import detect_r_peaks
from apex_emotion.signals import apply_bandpass
from apex_emotion.synth import MIXING, SynthConfig, generate_cohort, response_style

# short trials keep generation cheap; styles do not depend on trial length
QUICK = dict(n_videos=4, trial_seconds=5.0)


def pair_similarity_correlation(truth, task):
    traits = np.array([s.traits for s in truth.subjects]) - 4.0
    style = np.array([s.style[task] for s in truth.subjects])
    iu = np.triu_indices(len(traits), 1)
    trait_dist = np.linalg.norm(traits[:, None] - traits[None], axis=-1)[iu]
    style_dist = np.linalg.norm(style[:, None] - style[None], axis=-1)[iu]
    return np.corrcoef(trait_dist, style_dist)[0, 1]


def test_generator_is_deterministic():
    cfg = SynthConfig(n_subjects=3, seed=11, **QUICK)
    a, ta = generate_cohort(cfg)
    b, tb = generate_cohort(cfg)
    assert a == b and ta.to_dict() == tb.to_dict()
    c, _ = generate_cohort(SynthConfig(n_subjects=3, seed=12, **QUICK))
    assert a != c


def test_full_coupling_identical_traits_identical_style():
    traits = np.array([2.0, 5.5, 3.0, 6.0, 1.5])
    for task in MIXING:
        a = response_style(traits, 1.0, np.random.default_rng(0).normal(size=4), task)
        b = response_style(traits, 1.0, np.random.default_rng(1).normal(size=4), task)
        assert np.array_equal(a, b)


def test_zero_coupling_decouples_traits_and_responses():
    corr = {0.0: [], 1.0: []}
    for rho in corr:
        for seed in range(20):
            _, truth = generate_cohort(SynthConfig(n_subjects=24, coupling=rho, seed=seed,
                                                   **QUICK))
            corr[rho].append(np.mean([pair_similarity_correlation(truth, t) for t in MIXING]))
    assert abs(np.mean(corr[0.0])) < 0.05
    assert np.mean(corr[1.0]) > 0.5


def test_label_balance_under_defaults():
    subjects, _ = generate_cohort(SynthConfig(n_subjects=48, n_videos=36, trial_seconds=1.0))
    for task in ("arousal", "valence"):
        rate = np.mean([getattr(t, task) for s in subjects for t in s.trials])
        assert 0.35 <= rate <= 0.65


def test_default_shape():
    cfg = SynthConfig()
    assert (cfg.n_subjects, cfg.n_videos) == (48, 36)
    subjects, _ = generate_cohort(SynthConfig(n_subjects=1, n_videos=2))
    trial = subjects[0].trials[0]
    assert len(trial.ecg) == 15360 and trial.ecg.fs == 256.0
    assert len(trial.gsr) == 7680 and trial.gsr.fs == 128.0
    assert [s.subject_id for s in generate_cohort(SynthConfig(n_subjects=3, **QUICK))[0]] == \
        ["S01", "S02", "S03"]


def test_detector_recovers_generated_beats():
    subjects, truth = generate_cohort(SynthConfig(n_subjects=4, n_videos=4, seed=5))
    found = total = 0
    for subj, st in zip(subjects, truth.subjects):
        for trial in subj.trials:
            peaks = detect_r_peaks(apply_bandpass(trial.ecg))
            beats = st.beats[trial.video_id]
            # a beat counts as recovered when a detection lies within 50 ms
            dist = np.abs(beats[:, None] - peaks[None, :]).min(axis=1)
            found += int(np.sum(dist <= 0.05 * trial.ecg.fs))
            total += beats.size
    assert found / total >= 0.95


def test_ground_truth_dict():
    _, truth = generate_cohort(SynthConfig(n_subjects=2, **QUICK))
    d = truth.to_dict()
    assert len(d["subjects"]) == 2 and set(d["mixing"]) == {"arousal", "valence"}
    assert np.allclose(np.array(d["mixing"]["arousal"]).sum(axis=1), 0.0)


@pytest.mark.parametrize("bad", [dict(coupling=1.5), dict(coupling=-0.1), dict(noise_sd=-1.0),
                                 dict(n_subjects=0), dict(trial_seconds=0.0)])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        SynthConfig(**bad)

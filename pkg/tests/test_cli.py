import json

import pytest

from apex_emotion.cli import build_parser, main


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "data"
    code = main(["synth", "--out", str(out), "--subjects", "4", "--videos", "3",
                 "--seconds", "20", "--seed", "2"])
    assert code == 0
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_synth_layout(data_dir):
    assert (data_dir / "personality.csv").is_file() and (data_dir / "trials.csv").is_file()
    assert len(list(data_dir.glob("subject_*/ecg_*.csv"))) == 12


def test_extract(capsys, data_dir, tmp_path):
    code, out, _ = run(capsys, "extract", "--data-dir", data_dir, "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["rows"] == 4 * 3 * 4
    header = (tmp_path / "features.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["subject_id", "video_id", "window_index"]
    assert header[-2:] == ["arousal", "valence"] and len(header) == 3 + 42 + 2
    assert (tmp_path / "skipped.csv").is_file()


def test_eval_outputs(capsys, data_dir, tmp_path):
    code, out, _ = run(capsys, "eval", "--data-dir", data_dir, "--out", tmp_path,
                       "--task", "both", "--jobs", "1")
    assert code == 0
    summary = json.loads(out)
    assert set(summary) == {"arousal", "valence"} and summary["arousal"]["folds"] == 4
    for task in ("arousal", "valence"):
        for name in (f"report_{task}.json", f"roc_{task}.csv", f"roc_{task}.svg",
                     f"weights_{task}.csv"):
            assert (tmp_path / name).is_file()


def test_eval_is_byte_identical(capsys, data_dir, tmp_path):
    for jobs, sub in ((1, "a"), (2, "b")):
        assert run(capsys, "eval", "--data-dir", data_dir, "--out", tmp_path / sub,
                   "--seed", "7", "--jobs", jobs)[0] == 0
    for name in ("report_arousal.json", "roc_arousal.csv", "weights_arousal.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_compare_table(capsys, data_dir, tmp_path):
    code, out, _ = run(capsys, "compare", "--data-dir", data_dir, "--out", tmp_path,
                       "--jobs", "1")
    assert code == 0
    lines = out.splitlines()
    assert "arousal acc" in lines[0] and "valence AUC" in lines[0]
    assert lines[2].startswith("Bagging") and lines[3].startswith("Attention")
    assert set(json.loads((tmp_path / "compare.json").read_text())) == {"arousal", "valence"}


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--bogus"])
    assert exc.value.code == 2
    assert json.loads(capsys.readouterr().err.splitlines()[0])["error"] == "usage_error"
    code, _, err = run(capsys, "synth", "--out", "/tmp/x", "--coupling", "3")
    assert code == 2 and json.loads(err)["error"]


def test_missing_data_dir_is_a_failure(capsys, tmp_path):
    code, _, err = run(capsys, "extract", "--data-dir", tmp_path / "none", "--out", tmp_path)
    assert code == 1
    assert "does not exist" in json.loads(err)["message"]


def test_environment_defaults(monkeypatch, tmp_path):
    monkeypatch.setenv("APEX_EMOTION_SEED", "13")
    monkeypatch.setenv("APEX_EMOTION_DATA_DIR", str(tmp_path))
    monkeypatch.setenv("APEX_EMOTION_ECG_BAND", "0.5,30")
    monkeypatch.setenv("APEX_EMOTION_CANONICAL_ONLY", "yes")
    args = build_parser().parse_args(["extract", "--out", str(tmp_path)])
    assert args.seed == 13 and str(args.data_dir) == str(tmp_path)
    assert args.ecg_band == [0.5, 30.0] and args.canonical_only is True
    args = build_parser().parse_args(["extract", "--out", str(tmp_path), "--seed", "1"])
    assert args.seed == 1


def test_defaults_match_reference_settings():
    args = build_parser().parse_args(["eval", "--data-dir", "d", "--out", "o"])
    assert (args.window, args.shift, args.gsr_cutoff) == (5.0, 5.0, 0.2)
    assert args.ecg_band == [0.67, 40.0] and args.k_features == 10
    assert (args.max_depth, args.min_samples_leaf) == (5, 5)

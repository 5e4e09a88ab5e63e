"""Command-line interface: ``apex-emotion {synth,extract,eval,compare}``.

Every option can also be set through an environment variable named
``APEX_EMOTION_<OPTION>`` (upper case, dashes as underscores), e.g.
``APEX_EMOTION_SEED=3`` or ``APEX_EMOTION_DATA_DIR=/data``. Explicit flags win.

Failures print a JSON object ``{"error": <code>, "message": <text>}`` on
stderr. Exit status is 0 on success, 2 for usage or configuration errors and
1 for any other pipeline error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .apex import write_weights_csv
from .cohort import TASKS
from .dataset import build_datasets, ingest, read_exclusions
from .errors import ApexError, ConfigurationError
from .evaluation import EvalConfig, loso_compare
from .features import (ExtractConfig, extract_matrix, normalize_per_subject, write_feature_csv,
                       write_skip_report)
from .selection import DEFAULT_K
from .signals import FilterSpec
from .synth import SynthConfig, generate_cohort, write_dataset
from .tree import TreeParams

ENV_PREFIX = "APEX_EMOTION_"
EXIT_USAGE = 2
EXIT_FAILURE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage_error", message)
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit_error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")


def _opt(parser, *flags, **kwargs):
    """``add_argument`` whose default may come from the environment."""
    action = parser.add_argument(*flags, **kwargs)
    env = os.environ.get(ENV_PREFIX + action.dest.upper())
    if env is not None:
        if isinstance(action, argparse._StoreTrueAction):
            action.default = env.strip().lower() in {"1", "true", "yes", "on"}
        elif action.nargs is not None:
            conv = action.type or str
            try:
                action.default = [conv(v) for v in env.replace(",", " ").split()]
            except ValueError:
                raise ConfigurationError(f"bad value for {ENV_PREFIX}{action.dest.upper()}")
        else:
            action.default = env
        action.required = False
    return action


def _add_common(p, data=True, out_required=True):
    if data:
        _opt(p, "--data-dir", type=Path, required=True, help="dataset directory")
        _opt(p, "--exclude", type=Path, help="file listing subject ids to drop, one per line")
        _opt(p, "--threshold-arousal", type=float,
             help="split raw arousal ratings at this value (default: median)")
        _opt(p, "--threshold-valence", type=float,
             help="split raw valence ratings at this value (default: median)")
    _opt(p, "--out", type=Path, required=out_required, help="output directory")
    _opt(p, "--seed", type=int, default=0)
    _opt(p, "--jobs", type=int, default=0, help="worker processes (0 = all cores)")


def _add_extract_opts(p):
    _opt(p, "--window", type=float, default=5.0, help="window length in seconds")
    _opt(p, "--shift", type=float, default=5.0, help="window shift in seconds")
    _opt(p, "--gsr-cutoff", type=float, default=0.2, help="GSR low-pass cutoff (Hz)")
    _opt(p, "--ecg-band", type=float, nargs=2, default=[0.67, 40.0], metavar=("LOW", "HIGH"),
         help="ECG band-pass edges (Hz)")
    _opt(p, "--canonical-only", action="store_true",
         help="extract only the ten canonical features")


def _add_model_opts(p):
    _opt(p, "--k-features", type=int, default=DEFAULT_K)
    _opt(p, "--max-depth", type=int, default=TreeParams().max_depth)
    _opt(p, "--min-samples-leaf", type=int, default=TreeParams().min_samples_leaf)
    _opt(p, "--min-impurity-decrease", type=float, default=0.0)
    _opt(p, "--standardize-traits", action="store_true",
         help="z-score traits over the members before the inner product")


def _add_synth_opts(p):
    d = SynthConfig()
    _opt(p, "--subjects", type=int, default=d.n_subjects)
    _opt(p, "--videos", type=int, default=d.n_videos)
    _opt(p, "--seconds", type=float, default=d.trial_seconds)
    _opt(p, "--coupling", type=float, default=d.coupling)
    _opt(p, "--noise-sd", type=float, default=d.noise_sd)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="apex-emotion", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic dataset directory")
    _add_common(p, data=False)
    _add_synth_opts(p)

    p = sub.add_parser("extract", help="feature CSV and skip report")
    _add_common(p)
    _add_extract_opts(p)

    p = sub.add_parser("eval", help="leave-one-subject-out evaluation")
    _add_common(p)
    _add_extract_opts(p)
    _add_model_opts(p)
    _opt(p, "--task", choices=TASKS + ("both",), default="arousal")
    _opt(p, "--weighting", choices=("apex", "uniform"), default="apex")

    p = sub.add_parser("compare", help="APEX vs uniform-weight bagging on both tasks")
    _add_common(p, data=False, out_required=False)
    _opt(p, "--data-dir", type=Path, help="dataset directory (default: generate one)")
    _opt(p, "--exclude", type=Path)
    _opt(p, "--threshold-arousal", type=float)
    _opt(p, "--threshold-valence", type=float)
    _add_synth_opts(p)
    _add_extract_opts(p)
    _add_model_opts(p)
    return parser


# -- commands ----------------------------------------------------------------

def _extract_config(args) -> ExtractConfig:
    low, high = args.ecg_band
    return ExtractConfig(window_s=args.window, shift_s=args.shift,
                         ecg_filter=FilterSpec("band_pass", 4, float(low), float(high)),
                         gsr_filter=FilterSpec("low_pass", 4, float(args.gsr_cutoff)),
                         extended=not args.canonical_only)


def _eval_config(args) -> EvalConfig:
    params = TreeParams(args.max_depth, args.min_samples_leaf, args.min_impurity_decrease)
    return EvalConfig(params, args.k_features, standardize_traits=args.standardize_traits)


def _synth_config(args) -> SynthConfig:
    return SynthConfig(n_subjects=args.subjects, n_videos=args.videos,
                       trial_seconds=args.seconds, coupling=args.coupling,
                       noise_sd=args.noise_sd, seed=args.seed)


def _load(args):
    exclude = read_exclusions(args.exclude) if args.exclude else []
    thresholds = {"arousal": args.threshold_arousal, "valence": args.threshold_valence}
    return ingest(args.data_dir, exclude, {k: v for k, v in thresholds.items() if v is not None})


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def cmd_synth(args) -> dict:
    subjects, truth = generate_cohort(_synth_config(args))
    write_dataset(subjects, args.out, truth)
    return {"out": str(args.out), "subjects": len(subjects),
            "trials": sum(len(s.trials) for s in subjects)}


def cmd_extract(args) -> dict:
    subjects = _load(args)
    args.out.mkdir(parents=True, exist_ok=True)
    trials = [t for s in subjects for t in s.trials]
    raw = extract_matrix(trials, _extract_config(args), args.jobs)
    write_feature_csv(raw, args.out / "features.csv")
    if len(raw):
        write_feature_csv(normalize_per_subject(raw), args.out / "features_normalized.csv")
    write_skip_report(raw.skipped, args.out / "skipped.csv")
    return {"rows": len(raw), "skipped_trials": len(raw.skipped), "out": str(args.out)}


def _run_compare(datasets, args, tasks, weightings):
    config = _eval_config(args)
    return {task: loso_compare(datasets, task, args.seed, config, weightings, args.jobs)
            for task in tasks}


def cmd_eval(args) -> dict:
    datasets, raw = build_datasets(_load(args), _extract_config(args), args.jobs)
    args.out.mkdir(parents=True, exist_ok=True)
    write_skip_report(raw.skipped, args.out / "skipped.csv")
    tasks = TASKS if args.task == "both" else (args.task,)
    summary = {}
    for task, reports in _run_compare(datasets, args, tasks, (args.weighting,)).items():
        report = reports[args.weighting]
        (args.out / f"report_{task}.json").write_text(report.to_json() + "\n")
        report.write_roc_csv(args.out / f"roc_{task}.csv")
        report.write_roc_svg(args.out / f"roc_{task}.svg")
        write_weights_csv(report.weight_rows(), args.out / f"weights_{task}.csv")
        summary[task] = {"mean_accuracy": report.mean_accuracy, "mean_auc": report.mean_auc,
                         "folds": len(report.folds)}
    return summary


def format_table(results: dict) -> str:
    """Methods as rows; accuracy and AUC per task as columns."""
    names = {"apex": "Attention-based bagging (APEX)", "uniform": "Bagging (uniform weights)"}
    head = f"{'Method':<32}" + "".join(f"{t + ' acc':>14}{t + ' AUC':>14}" for t in results)
    lines = [head, "-" * len(head)]
    for w in ("uniform", "apex"):
        cells = []
        for task in results:
            rep = results[task][w]
            auc = "n/a" if rep.mean_auc is None else f"{rep.mean_auc:.3f}"
            cells.append(f"{100 * rep.mean_accuracy:>13.1f}%{auc:>14}")
        lines.append(f"{names[w]:<32}" + "".join(cells))
    return "\n".join(lines)


def cmd_compare(args) -> dict:
    if args.data_dir is not None:
        subjects = _load(args)
    else:
        subjects, _ = generate_cohort(_synth_config(args))
    datasets, _ = build_datasets(subjects, _extract_config(args), args.jobs)
    results = _run_compare(datasets, args, TASKS, ("apex", "uniform"))
    table = format_table(results)
    print(table)
    payload = {task: {w: {"mean_accuracy": r.mean_accuracy,
                          "mean_trial_accuracy": r.mean_trial_accuracy,
                          "mean_auc": r.mean_auc} for w, r in reps.items()}
               for task, reps in results.items()}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        _write_json(args.out / "compare.json", payload)
        (args.out / "compare.txt").write_text(table + "\n")
        for task, reps in results.items():
            for w, rep in reps.items():
                (args.out / f"report_{task}_{w}.json").write_text(rep.to_json() + "\n")
    return payload


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "eval": cmd_eval, "compare": cmd_compare}


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except ConfigurationError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_USAGE
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except ConfigurationError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_USAGE
    except ApexError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_FAILURE
    except OSError as exc:
        _emit_error("io_error", str(exc))
        return EXIT_FAILURE
    if args.command != "compare":
        print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""On-disk dataset layout: ingestion, validation and label binarization.

Layout::

    root/
      personality.csv            subject_id,extraversion,...,openness
      trials.csv                 subject_id,video_id,arousal,valence
      subject_<id>/ecg_<video>.csv   t_seconds,value
      subject_<id>/gsr_<video>.csv   t_seconds,value

``arousal``/``valence`` are either 0/1 labels or raw ratings. Raw ratings are
split per task at the median over all trials (or at a given threshold);
ratings strictly above the threshold become class 1.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .apex import SubjectDataset
from .cohort import TASKS, TRAIT_NAMES, PersonalityTraits, Subject, Trial
from .errors import IngestionError, InputError
from .features import ExtractConfig, FeatureMatrix, extract_matrix, normalize_per_subject
from .signals import read_signal_csv


def binarize(ratings, threshold: float | None = None) -> tuple[np.ndarray, float]:
    """0/1 labels pass through; otherwise split at ``threshold`` (median by default)."""
    r = np.asarray(ratings, dtype=np.float64)
    if threshold is None and np.all((r == 0) | (r == 1)):
        return r.astype(int), float("nan")
    if threshold is None:
        threshold = float(np.median(r))
    return (r > threshold).astype(int), float(threshold)


def read_exclusions(path) -> list[str]:
    """Subject ids, one per line; blank lines and ``#`` comments are ignored."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _read_table(path: Path, required: Sequence[str]) -> list[dict]:
    if not path.is_file():
        raise IngestionError(f"missing file {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing columns {missing}")
        return list(reader)


def _read_traits(root: Path) -> dict[str, PersonalityTraits]:
    path = root / "personality.csv"
    out = {}
    for line_no, row in enumerate(_read_table(path, ("subject_id",) + TRAIT_NAMES), start=2):
        sid = row["subject_id"].strip()
        if sid in out:
            raise IngestionError(f"{path}, row {line_no}: duplicate subject {sid}")
        try:
            out[sid] = PersonalityTraits(*(float(row[n]) for n in TRAIT_NAMES))
        except (InputError, ValueError) as exc:
            raise IngestionError(f"{path}, row {line_no} (subject {sid}): {exc}") from None
    return out


def ingest(root, exclude: Sequence[str] = (), thresholds: dict | None = None) -> list[Subject]:
    """Read and validate a dataset directory into subjects with raw trials.

    Subjects are returned in order of first appearance in ``trials.csv``.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestionError(f"dataset directory {root} does not exist")
    thresholds = thresholds or {}
    traits = _read_traits(root)
    trials_path = root / "trials.csv"
    rows = _read_table(trials_path, ("subject_id", "video_id") + TASKS)
    excluded = set(exclude)
    rows = [r for r in rows if r["subject_id"].strip() not in excluded]
    if not rows:
        raise IngestionError(f"{trials_path}: no trials after exclusions")

    labels = {}
    for task in TASKS:
        try:
            raw = [float(r[task]) for r in rows]
        except ValueError as exc:
            raise IngestionError(f"{trials_path}: non-numeric {task} rating ({exc})") from None
        labels[task], _ = binarize(raw, thresholds.get(task))

    subjects: dict[str, Subject] = {}
    seen = set()
    for i, row in enumerate(rows):
        sid, vid = row["subject_id"].strip(), row["video_id"].strip()
        if sid not in traits:
            raise IngestionError(f"{trials_path}: subject {sid} has no row in personality.csv")
        if (sid, vid) in seen:
            raise IngestionError(f"{trials_path}: duplicate trial {sid}/{vid}")
        seen.add((sid, vid))
        sdir = root / f"subject_{sid}"
        sig = {}
        for kind in ("ecg", "gsr"):
            path = sdir / f"{kind}_{vid}.csv"
            if not path.is_file():
                raise IngestionError(f"missing signal file {path}")
            try:
                sig[kind] = read_signal_csv(path)
            except InputError as exc:
                raise IngestionError(f"{path}: {exc}") from None
        subj = subjects.setdefault(sid, Subject(sid, traits[sid], []))
        subj.trials.append(Trial(sid, vid, sig["ecg"], sig["gsr"],
                                 int(labels["arousal"][i]), int(labels["valence"][i])))
    return list(subjects.values())


def build_datasets(subjects: Sequence[Subject], config: ExtractConfig | None = None,
                   jobs: int = 1) -> tuple[list[SubjectDataset], FeatureMatrix]:
    """Extract windows, normalize per subject and split into per-subject datasets.

    Subjects left with no valid window are dropped; the raw (unnormalized)
    matrix, with its skip list, is returned alongside.
    """
    trials = [t for s in subjects for t in s.trials]
    raw = extract_matrix(trials, config, jobs)
    if len(raw) == 0:
        raise IngestionError("no valid feature windows in the cohort")
    norm = normalize_per_subject(raw)
    out = []
    for s in subjects:
        rows = norm.for_subject(s.subject_id)
        if len(rows):
            out.append(SubjectDataset(s.subject_id, s.traits, rows))
    return out, raw

"""Raw cohort containers: personality traits, trials and subjects."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .signals import Signal

TRAIT_NAMES = (
    "extraversion",
    "agreeableness",
    "conscientiousness",
    "emotional_stability",
    "openness",
)
TRAIT_MIN, TRAIT_MAX = 1.0, 7.0
TASKS = ("arousal", "valence")


@dataclass(frozen=True)
class PersonalityTraits:
    """Big-five trait vector, each trait on the 1..7 scale."""

    extraversion: float
    agreeableness: float
    conscientiousness: float
    emotional_stability: float
    openness: float

    def __post_init__(self):
        for name in TRAIT_NAMES:
            v = float(getattr(self, name))
            if not (TRAIT_MIN <= v <= TRAIT_MAX):
                raise InputError(f"trait {name}={v} outside [{TRAIT_MIN}, {TRAIT_MAX}]")
            object.__setattr__(self, name, v)

    @classmethod
    def from_sequence(cls, values) -> PersonalityTraits:
        values = [float(v) for v in values]
        if len(values) != 5:
            raise InputError(f"personality vector must have 5 entries, got {len(values)}")
        return cls(*values)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in TRAIT_NAMES], dtype=np.float64)


def check_task(task: str) -> str:
    if task not in TASKS:
        raise InputError(f"task must be one of {TASKS}, got {task!r}")
    return task


@dataclass(eq=False)
class Trial:
    """One subject watching one video: co-registered ECG and GSR plus labels."""

    subject_id: str
    video_id: str
    ecg: Signal
    gsr: Signal
    arousal: int
    valence: int

    def __post_init__(self):
        for task in TASKS:
            if getattr(self, task) not in (0, 1):
                raise InputError(f"{task} label must be 0 or 1, got {getattr(self, task)!r}")

    def label(self, task: str) -> int:
        return getattr(self, check_task(task))

    def __eq__(self, other):
        if not isinstance(other, Trial):
            return NotImplemented
        return (self.subject_id == other.subject_id and self.video_id == other.video_id
                and self.ecg == other.ecg and self.gsr == other.gsr
                and self.arousal == other.arousal and self.valence == other.valence)


@dataclass(eq=False)
class Subject:
    """A participant's traits and raw trials."""

    subject_id: str
    traits: PersonalityTraits
    trials: list[Trial] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, Subject):
            return NotImplemented
        return (self.subject_id == other.subject_id and self.traits == other.traits
                and self.trials == other.trials)

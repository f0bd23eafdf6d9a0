"""Shared domain types: band order, emotions, trait list, rows and segments."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Canonical band order; every 8-vector in the project follows it.
BANDS = (
    "delta",
    "theta",
    "low_alpha",
    "high_alpha",
    "low_beta",
    "high_beta",
    "low_gamma",
    "mid_gamma",
)
N_BANDS = len(BANDS)

MAX_BAND_VALUE = (1 << 24) - 1  # band powers are 3-byte unsigned on the wire

# The 14 binary subject traits, canonical order.
TRAITS = (
    "religious_practice",
    "smoking",
    "religious_beliefs",
    "physical_exercise",
    "family_diabetes",
    "family_heart_disease",
    "family_brain_stroke",
    "fast_food",
    "high_fat",
    "high_sugar",
    "outdoor_games",
    "sleep_issues",
    "regular_sleep_pattern",
    "vegetable_consumption",
)
N_TRAITS = len(TRAITS)


class Emotion(Enum):
    """The four elicitation phases, in session order."""

    HAPPY = "happy"
    SAD = "sad"
    NEUTRAL = "neutral"
    MEDITATION = "meditation"


EMOTIONS = tuple(Emotion)


@dataclass(frozen=True)
class BandPowerRow:
    """One headset emission: eight unitless band magnitudes at a timestamp."""

    timestamp_ms: int
    bands: tuple[int, ...]  # length 8, canonical order, each in [0, 2^24)

    def __post_init__(self):
        if len(self.bands) != N_BANDS:
            raise ValueError(f"expected {N_BANDS} band values, got {len(self.bands)}")
        for v in self.bands:
            if not 0 <= v <= MAX_BAND_VALUE:
                raise ValueError(f"band value {v} outside 24-bit range")


@dataclass
class Segment:
    """Contiguous band-power rows for one (subject, emotion) recording."""

    subject_id: str
    emotion: Emotion
    rows: list[BandPowerRow] = field(default_factory=list)

    def band_matrix(self) -> np.ndarray:
        """Rows as an (n, 8) float array in canonical band order."""
        return np.array([r.bands for r in self.rows], dtype=float).reshape(-1, N_BANDS)


@dataclass(frozen=True)
class TraitLabels:
    """Ground-truth yes/no answers for the 14 surveyed traits."""

    values: tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != N_TRAITS:
            raise ValueError(f"expected {N_TRAITS} trait labels, got {len(self.values)}")

    def __getitem__(self, trait: str) -> bool:
        return self.values[TRAITS.index(trait)]

    def as_dict(self) -> dict[str, bool]:
        return dict(zip(TRAITS, self.values))

    @classmethod
    def from_dict(cls, d: dict) -> "TraitLabels":
        missing = [t for t in TRAITS if t not in d]
        if missing:
            raise KeyError(f"missing trait labels: {missing}")
        return cls(tuple(bool(d[t]) for t in TRAITS))


def derive_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Child RNG for (seed, spawn_key).

    Seed mixing goes through numpy's SeedSequence so parallel workers get
    streams independent of scheduling order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))

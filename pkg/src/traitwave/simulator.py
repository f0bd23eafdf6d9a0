"""Seeded synthetic cohort generator.

Stands in for the unavailable 80-participant recordings. Band powers are
modeled log-normally: positive, heavy-tailed, and additively composable in
log space, so trait and emotion influences stack cleanly. Each trait carries
a fixed sparse signature over the 16 log-space knobs (8 band log-means,
8 band log-sigmas); signatures are pairwise orthogonal and each trait's
learnability is tunable by one scale knob.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .codec import eeg_power_packet
from .core import (
    EMOTIONS,
    MAX_BAND_VALUE,
    N_BANDS,
    N_TRAITS,
    BandPowerRow,
    Emotion,
    Segment,
    TraitLabels,
    derive_rng,
)

DEFAULT_ROWS_PER_SECOND = 1  # vendor-typical band-power cadence
DEFAULT_DURATION_S = 120  # one ~2-minute video per emotion

# Population log-magnitude baseline per band, decreasing from delta to
# mid gamma (delta ~ exp(12.4) ~ 2.4e5, comfortably inside 24 bits).
BASE_LOG_MEAN = np.array([12.4, 11.8, 11.0, 10.8, 10.4, 10.2, 9.6, 9.4])
SUBJECT_JITTER = 0.18  # per-subject baseline spread around BASE_LOG_MEAN

# Additive log-space modulation per emotion: happy highest, sad lowest,
# meditation stable in between, neutral close to happy.
EMOTION_SHIFT = {
    Emotion.HAPPY: np.full(N_BANDS, 0.30),
    Emotion.SAD: np.full(N_BANDS, -0.30),
    Emotion.NEUTRAL: np.full(N_BANDS, 0.15),
    Emotion.MEDITATION: np.full(N_BANDS, 0.00),
}

MEAN_EFFECT_AMPLITUDE = 1.1  # log-mean shift per signature entry at scale 1
STD_EFFECT_AMPLITUDE = 0.6  # log-sigma shift per signature entry at scale 1


def trait_signatures() -> np.ndarray:
    """(14, 16) sparse trait signatures, pairwise orthogonal.

    Columns 0..7 drive band log-means, columns 8..15 band log-sigmas. Each
    trait touches exactly two coordinates: the mean of band t mod 8 and the
    sigma of band (t+3) mod 8. Traits 8..13 reuse the pairs of traits 0..5
    with the sigma sign flipped, which keeps the dot product of any two
    signatures at zero. Sparse signatures keep each band influenced by at
    most two traits, so every trait stays individually learnable.
    """
    sig = np.zeros((N_TRAITS, 2 * N_BANDS))
    for t in range(N_TRAITS):
        band = t % N_BANDS
        sig[t, band] = 1.0
        sig[t, N_BANDS + (band + 3) % N_BANDS] = 1.0 if t < N_BANDS else -1.0
    return sig


@dataclass(frozen=True)
class EffectConfig:
    """How strongly positive trait labels displace band-power distributions.

    scale 0 removes all trait signal (the null configuration).
    """

    scale: float = 1.0
    positive_rate: float = 0.5

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("effect scale must be >= 0")
        if not 0 < self.positive_rate < 1:
            raise ValueError("positive_rate must be in (0, 1)")


@dataclass
class SubjectProfile:
    subject_id: str
    labels: TraitLabels
    base_log_mean: np.ndarray  # (8,)
    base_log_std: np.ndarray  # (8,), > 0
    emotion_shift: dict[Emotion, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(self.base_log_std > 0):
            raise ValueError("base_log_std must be positive")

    def to_json(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "labels": self.labels.as_dict(),
            "base_log_mean": self.base_log_mean.tolist(),
            "base_log_std": self.base_log_std.tolist(),
            "emotion_shift": {e.value: s.tolist() for e, s in self.emotion_shift.items()},
        }

    @classmethod
    def from_json(cls, d: dict) -> "SubjectProfile":
        return cls(
            subject_id=d["subject_id"],
            labels=TraitLabels.from_dict(d["labels"]),
            base_log_mean=np.array(d["base_log_mean"]),
            base_log_std=np.array(d["base_log_std"]),
            emotion_shift={Emotion(k): np.array(v) for k, v in d["emotion_shift"].items()},
        )


def sample_profile(subject_id: str, effects: EffectConfig, rng: np.random.Generator) -> SubjectProfile:
    labels = TraitLabels(tuple(bool(v) for v in rng.random(N_TRAITS) < effects.positive_rate))
    log_mean = BASE_LOG_MEAN + rng.normal(0.0, SUBJECT_JITTER, N_BANDS)
    log_sigma = rng.uniform(0.3, 0.45, N_BANDS)
    sig = trait_signatures()
    for t in range(N_TRAITS):
        if labels.values[t]:
            log_mean = log_mean + effects.scale * MEAN_EFFECT_AMPLITUDE * sig[t, :N_BANDS]
            log_sigma = log_sigma * np.exp(effects.scale * STD_EFFECT_AMPLITUDE * sig[t, N_BANDS:])
    shift = {e: EMOTION_SHIFT[e] + rng.normal(0.0, 0.05, N_BANDS) for e in EMOTIONS}
    return SubjectProfile(
        subject_id=subject_id,
        labels=labels,
        base_log_mean=log_mean,
        base_log_std=log_sigma,
        emotion_shift=shift,
    )


def sample_cohort(n_subjects: int, effects: EffectConfig, seed: int) -> list[SubjectProfile]:
    """Deterministic cohort: subject i is generated from a child RNG of
    (seed, i), so cohorts are reproducible and parallelizable."""
    if n_subjects < 1:
        raise ValueError("n_subjects must be >= 1")
    return [
        sample_profile(f"S{i:04d}", effects, derive_rng(seed, i)) for i in range(n_subjects)
    ]


def segment_seed(seed: int, subject_index: int, emotion: Emotion) -> int:
    """Stable per-(subject, emotion) child seed for segment generation."""
    key = (subject_index, list(EMOTIONS).index(emotion))
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def generate_segment(
    profile: SubjectProfile,
    emotion: Emotion,
    duration_s: int = DEFAULT_DURATION_S,
    rows_per_second: int = DEFAULT_ROWS_PER_SECOND,
    seed: int = 0,
) -> Segment:
    """duration_s x rows_per_second rows of log-normal band powers."""
    if duration_s < 1:
        raise ValueError("duration_s must be >= 1")
    if rows_per_second < 1:
        raise ValueError("rows_per_second must be >= 1")
    rng = derive_rng(seed)
    n = duration_s * rows_per_second
    mu = profile.base_log_mean + profile.emotion_shift[emotion]
    draws = np.exp(rng.normal(mu, profile.base_log_std, size=(n, N_BANDS)))
    values = np.clip(np.rint(draws), 0, MAX_BAND_VALUE).astype(np.int64)
    rows = [
        BandPowerRow(
            timestamp_ms=int(round(1000 * i / rows_per_second)),
            bands=tuple(int(v) for v in values[i]),
        )
        for i in range(n)
    ]
    return Segment(subject_id=profile.subject_id, emotion=emotion, rows=rows)


def segment_to_wire(segment: Segment) -> bytes:
    """One EegPower packet per row; decodes back to identical band values."""
    return b"".join(eeg_power_packet(row.bands) for row in segment.rows)


def cohort_records(
    profiles: list[SubjectProfile],
    duration_s: int = DEFAULT_DURATION_S,
    rows_per_second: int = DEFAULT_ROWS_PER_SECOND,
    seed: int = 0,
):
    """Generate one SessionRecord per profile (four segments each)."""
    from .dataset import SessionRecord

    records = []
    for i, profile in enumerate(profiles):
        segments = {
            e: generate_segment(
                profile, e, duration_s, rows_per_second, seed=segment_seed(seed, i, e)
            )
            for e in EMOTIONS
        }
        records.append(
            SessionRecord(
                subject_id=profile.subject_id,
                segments=segments,
                labels=profile.labels,
                provenance="simulated",
            )
        )
    return records


def write_manifest(profiles: list[SubjectProfile], path) -> None:
    with open(path, "w") as f:
        for p in profiles:
            f.write(json.dumps(p.to_json(), sort_keys=True) + "\n")


def read_manifest(path) -> list[SubjectProfile]:
    with open(path) as f:
        return [SubjectProfile.from_json(json.loads(line)) for line in f if line.strip()]

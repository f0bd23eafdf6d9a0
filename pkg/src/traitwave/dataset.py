"""Session store: CSV/JSONL schemas, ingest/export, and the 80/20 split.

The split is taken at subject granularity: all four of a subject's segments
land on the same side, so no subject identity leaks across train/test.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .core import BANDS, EMOTIONS, TRAITS, BandPowerRow, Emotion, Segment, TraitLabels, derive_rng
from .errors import EmotionError, LabelError, SchemaError, TooFewSubjects

SEGMENTS_CSV = "segments.csv"
LABELS_JSONL = "labels.jsonl"

SEGMENT_HEADER = ["subject_id", "emotion", "timestamp_ms", *BANDS]

PROVENANCES = ("simulated", "replayed", "live")


@dataclass
class SessionRecord:
    """One subject: four emotion segments plus the 14 trait answers."""

    subject_id: str
    segments: dict[Emotion, Segment]
    labels: TraitLabels
    provenance: str = "simulated"

    def __post_init__(self):
        if set(self.segments) != set(EMOTIONS):
            missing = [e.value for e in EMOTIONS if e not in self.segments]
            raise EmotionError(f"subject {self.subject_id} missing segments: {missing}")
        if self.provenance not in PROVENANCES:
            raise SchemaError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class Split:
    train: frozenset[str]
    test: frozenset[str]
    seed: int

    def to_json(self) -> dict:
        return {"seed": self.seed, "train": sorted(self.train), "test": sorted(self.test)}

    @classmethod
    def from_json(cls, d: dict) -> "Split":
        return cls(train=frozenset(d["train"]), test=frozenset(d["test"]), seed=d["seed"])


def split_80_20(records: list[SessionRecord], seed: int) -> Split:
    """Subject-level 80/20 partition, deterministic per seed.

    Train size is round(0.8 * n) with ties toward train; input order does
    not matter (ids are sorted before the seeded shuffle).
    """
    ids = sorted({r.subject_id for r in records})
    n = len(ids)
    if n < 5:
        raise TooFewSubjects(f"need at least 5 subjects, got {n}")
    rng = derive_rng(seed)
    order = rng.permutation(n)
    n_train = math.floor(0.8 * n + 0.5)
    shuffled = [ids[i] for i in order]
    return Split(
        train=frozenset(shuffled[:n_train]),
        test=frozenset(shuffled[n_train:]),
        seed=seed,
    )


def save_split(split: Split, path) -> None:
    Path(path).write_text(json.dumps(split.to_json(), indent=2) + "\n")


def load_split(path) -> Split:
    return Split.from_json(json.loads(Path(path).read_text()))


def export(records: list[SessionRecord], path) -> None:
    """Write segments.csv + labels.jsonl under the directory `path`.

    Serialization is canonical: subjects sorted by id, emotions in session
    order, so identical records always produce byte-identical files.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: r.subject_id)
    with open(root / SEGMENTS_CSV, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SEGMENT_HEADER)
        for rec in ordered:
            for emotion in EMOTIONS:
                for row in rec.segments[emotion].rows:
                    w.writerow([rec.subject_id, emotion.value, row.timestamp_ms, *row.bands])
    with open(root / LABELS_JSONL, "w") as f:
        for rec in ordered:
            line = {"subject_id": rec.subject_id, "provenance": rec.provenance}
            line.update(rec.labels.as_dict())
            f.write(json.dumps(line, sort_keys=True) + "\n")


def ingest(path) -> list[SessionRecord]:
    """Read a dataset directory written by export(); validates all invariants."""
    root = Path(path)
    seg_path = root / SEGMENTS_CSV
    lab_path = root / LABELS_JSONL
    if not seg_path.exists() or not lab_path.exists():
        raise SchemaError(f"{path} must contain {SEGMENTS_CSV} and {LABELS_JSONL}")

    labels: dict[str, TraitLabels] = {}
    provenance: dict[str, str] = {}
    with open(lab_path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            d = json.loads(line)
            if "subject_id" not in d:
                raise SchemaError(f"{LABELS_JSONL}:{lineno}: missing subject_id")
            try:
                labels[d["subject_id"]] = TraitLabels.from_dict(d)
            except KeyError as exc:
                raise LabelError(f"{LABELS_JSONL}:{lineno}: {exc}") from exc
            provenance[d["subject_id"]] = d.get("provenance", "simulated")

    segments: dict[str, dict[Emotion, Segment]] = {}
    with open(seg_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SEGMENT_HEADER:
            raise SchemaError(f"bad segment header: {header}")
        for row in reader:
            if len(row) != len(SEGMENT_HEADER):
                raise SchemaError(f"segment row has {len(row)} columns")
            subject, emotion_name = row[0], row[1]
            try:
                emotion = Emotion(emotion_name)
            except ValueError as exc:
                raise SchemaError(f"unknown emotion {emotion_name!r}") from exc
            seg = segments.setdefault(subject, {}).setdefault(
                emotion, Segment(subject_id=subject, emotion=emotion)
            )
            seg.rows.append(
                BandPowerRow(timestamp_ms=int(row[2]), bands=tuple(int(v) for v in row[3:]))
            )

    records = []
    for subject in sorted(labels):
        segs = segments.get(subject, {})
        missing = [e.value for e in EMOTIONS if e not in segs]
        if missing:
            raise EmotionError(f"subject {subject} missing segments: {missing}")
        records.append(
            SessionRecord(
                subject_id=subject,
                segments=segs,
                labels=labels[subject],
                provenance=provenance[subject],
            )
        )
    unknown = set(segments) - set(labels)
    if unknown:
        raise LabelError(f"segments without labels: {sorted(unknown)}")
    return records


def trait_vector(records: list[SessionRecord], trait: str) -> dict[str, bool]:
    if trait not in TRAITS:
        raise LabelError(f"unknown trait {trait!r}")
    return {r.subject_id: r.labels[trait] for r in records}

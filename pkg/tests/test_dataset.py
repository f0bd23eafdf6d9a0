import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traitwave.core import EMOTIONS, TraitLabels
from traitwave.dataset import (
    SessionRecord,
    export,
    ingest,
    load_split,
    save_split,
    split_80_20,
)
from traitwave.errors import EmotionError, LabelError, TooFewSubjects
from traitwave.simulator import EffectConfig, cohort_records, sample_cohort


@pytest.fixture(scope="module")
def records():
    profiles = sample_cohort(8, EffectConfig(), seed=7)
    return cohort_records(profiles, duration_s=5, seed=7)


def make_stub_records(n):
    profiles = sample_cohort(n, EffectConfig(), seed=1)
    return cohort_records(profiles, duration_s=1, seed=1)


def test_export_ingest_round_trip(tmp_path, records):
    export(records, tmp_path / "data")
    back = ingest(tmp_path / "data")
    assert len(back) == len(records)
    for a, b in zip(sorted(records, key=lambda r: r.subject_id), back):
        assert a.subject_id == b.subject_id
        assert a.labels == b.labels
        assert a.provenance == b.provenance
        for e in EMOTIONS:
            assert a.segments[e].rows == b.segments[e].rows


def test_canonical_serialization(tmp_path, records):
    export(records, tmp_path / "one")
    export(ingest(tmp_path / "one"), tmp_path / "two")
    for name in ("segments.csv", "labels.jsonl"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_export_empty(tmp_path):
    export([], tmp_path / "empty")
    text = (tmp_path / "empty" / "segments.csv").read_text()
    assert text.splitlines()[0].startswith("subject_id,emotion,timestamp_ms,delta")
    assert len(text.splitlines()) == 1


def test_missing_emotion_segment_reported(tmp_path, records):
    export(records, tmp_path / "data")
    csv_path = tmp_path / "data" / "segments.csv"
    lines = csv_path.read_text().splitlines()
    victim = records[0].subject_id
    kept = [
        ln
        for ln in lines
        if not (ln.startswith(f"{victim},meditation,"))
    ]
    csv_path.write_text("\n".join(kept) + "\n")
    with pytest.raises(EmotionError, match=f"{victim}.*meditation"):
        ingest(tmp_path / "data")


def test_missing_trait_label_reported(tmp_path, records):
    export(records, tmp_path / "data")
    lab = tmp_path / "data" / "labels.jsonl"
    lines = [json.loads(ln) for ln in lab.read_text().splitlines()]
    del lines[0]["smoking"]
    lab.write_text("\n".join(json.dumps(d) for d in lines) + "\n")
    with pytest.raises(LabelError, match="smoking"):
        ingest(tmp_path / "data")


def test_missing_segment_constructor():
    labels = TraitLabels((True,) * 14)
    with pytest.raises(EmotionError):
        SessionRecord(subject_id="x", segments={}, labels=labels)


def test_cohort_counts(tmp_path):
    records = make_stub_records(16)
    export(records, tmp_path / "d")
    back = ingest(tmp_path / "d")
    assert len(back) == 16
    assert sum(len(r.segments) for r in back) == 64


def test_split_80_subjects():
    records = make_stub_records(80)
    split = split_80_20(records, seed=42)
    assert len(split.train) == 64
    assert len(split.test) == 16
    assert 4 * len(split.train) == 256
    assert 4 * len(split.test) == 64


def test_split_rounding_five_subjects():
    split = split_80_20(make_stub_records(5), seed=0)
    assert len(split.train) == 4 and len(split.test) == 1


def test_split_too_few():
    with pytest.raises(TooFewSubjects):
        split_80_20(make_stub_records(4), seed=0)


def test_split_order_independent():
    records = make_stub_records(10)
    a = split_80_20(records, seed=3)
    b = split_80_20(list(reversed(records)), seed=3)
    assert a == b


def test_split_save_load(tmp_path):
    split = split_80_20(make_stub_records(10), seed=3)
    save_split(split, tmp_path / "split.json")
    assert load_split(tmp_path / "split.json") == split


@given(n=st.integers(5, 60), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_split_properties(n, seed):
    ids = [f"S{i:04d}" for i in range(n)]

    class Stub:
        def __init__(self, sid):
            self.subject_id = sid

    split = split_80_20([Stub(i) for i in ids], seed=seed)
    assert split.train.isdisjoint(split.test)
    assert split.train | split.test == set(ids)
    import math

    assert len(split.train) == math.floor(0.8 * n + 0.5)

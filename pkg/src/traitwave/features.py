"""Segment statistics: 16-dim feature vectors and box-plot summaries."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import BANDS, EMOTIONS, N_BANDS, BandPowerRow, Emotion, Segment
from .errors import AllZeroRow, EmptyInput, EmptySegment

# Interleaved per band: mean_delta, std_delta, mean_theta, ...
FEATURE_COLUMNS = tuple(f"{stat}_{band}" for band in BANDS for stat in ("mean", "std"))
N_FEATURES = len(FEATURE_COLUMNS)


@dataclass(frozen=True)
class FeatureVector:
    subject_id: str
    emotion: Emotion
    values: tuple[float, ...]  # length 16, FEATURE_COLUMNS order

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.values)}")


def segment_features(matrix: np.ndarray) -> np.ndarray:
    """(n, 8) band matrix -> 16 interleaved mean/std values.

    Sample standard deviation (n-1 denominator), 0 by convention when n == 1.
    """
    if matrix.shape[0] == 0:
        raise EmptySegment("segment has no rows")
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0, ddof=1) if matrix.shape[0] > 1 else np.zeros(N_BANDS)
    out = np.empty(N_FEATURES)
    out[0::2] = means
    out[1::2] = stds
    return out


def extract_features(segment: Segment, relative: bool = False) -> FeatureVector:
    matrix = segment.band_matrix()
    if matrix.shape[0] == 0:
        raise EmptySegment(f"segment {segment.subject_id}/{segment.emotion.value} is empty")
    if relative:
        matrix = np.array([relative_band_power(r) for r in segment.rows])
    values = segment_features(matrix)
    return FeatureVector(segment.subject_id, segment.emotion, tuple(float(v) for v in values))


def relative_band_power(row: BandPowerRow) -> np.ndarray:
    """Each band's share of the row's total power; sums to 1."""
    bands = np.array(row.bands, dtype=float)
    total = bands.sum()
    if total <= 0:
        raise AllZeroRow("all eight band values are zero")
    return bands / total


@dataclass(frozen=True)
class BoxplotStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": list(self.outliers),
        }


def boxplot_stats(values) -> BoxplotStats:
    """Five-number summary with Tukey 1.5*IQR whiskers and outliers.

    Quartiles use linear interpolation on sorted order statistics
    (position p*(n-1), zero-based).
    """
    data = np.asarray(sorted(values), dtype=float)
    if data.size == 0:
        raise EmptyInput("boxplot_stats needs at least one value")
    q1, med, q3 = np.quantile(data, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inliers = data[(data >= lo_fence) & (data <= hi_fence)]
    outliers = data[(data < lo_fence) | (data > hi_fence)]
    # fences always bracket the quartiles, so inliers is never empty; a
    # whisker collapses to its box edge when no inlier lies beyond it
    # (an extreme outlier can interpolate q1 below the smallest inlier)
    return BoxplotStats(
        n=int(data.size),
        min=float(data[0]),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(data[-1]),
        whisker_low=float(min(inliers[0], q1)),
        whisker_high=float(max(inliers[-1], q3)),
        outliers=tuple(float(v) for v in outliers),
    )


def band_emotion_report(records, use_relative: bool = False) -> dict[str, dict[str, BoxplotStats]]:
    """8 x 4 grid of box plots over per-segment band means."""
    if not records:
        raise EmptyInput("no records")
    grid: dict[str, dict[str, BoxplotStats]] = {}
    per_cell: dict[tuple[str, str], list[float]] = {}
    for rec in records:
        for emotion in EMOTIONS:
            seg = rec.segments[emotion]
            matrix = (
                np.array([relative_band_power(r) for r in seg.rows])
                if use_relative
                else seg.band_matrix()
            )
            if matrix.shape[0] == 0:
                raise EmptySegment(f"{rec.subject_id}/{emotion.value}")
            means = matrix.mean(axis=0)
            for b, band in enumerate(BANDS):
                per_cell.setdefault((band, emotion.value), []).append(float(means[b]))
    for band in BANDS:
        grid[band] = {
            emotion.value: boxplot_stats(per_cell[(band, emotion.value)]) for emotion in EMOTIONS
        }
    return grid


def report_to_json(grid) -> str:
    return json.dumps(
        {band: {emo: bs.to_json() for emo, bs in row.items()} for band, row in grid.items()},
        indent=2,
        sort_keys=True,
    )


class SegmentFeaturizer(BaseEstimator, TransformerMixin):
    """Segments -> (n, 16) feature matrix, sklearn-style.

    relative: use each row's relative band powers instead of raw magnitudes.
    standardize: z-score each feature column with statistics learned in fit
    (train side only), so test data never influences the scaling.
    """

    def __init__(self, relative: bool = False, standardize: bool = False):
        self.relative = relative
        self.standardize = standardize

    def _matrix(self, segments) -> np.ndarray:
        return np.array(
            [extract_features(s, relative=self.relative).values for s in segments], dtype=float
        )

    def fit(self, segments, y=None):
        if self.standardize:
            X = self._matrix(segments)
            self.mean_ = X.mean(axis=0)
            scale = X.std(axis=0)
            self.scale_ = np.where(scale > 0, scale, 1.0)
        else:
            self.mean_ = np.zeros(N_FEATURES)
            self.scale_ = np.ones(N_FEATURES)
        return self

    def transform(self, segments) -> np.ndarray:
        X = self._matrix(segments)
        return (X - self.mean_) / self.scale_


def write_feature_csv(features: list[FeatureVector], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["subject_id", "emotion", *FEATURE_COLUMNS])
        for fv in features:
            w.writerow([fv.subject_id, fv.emotion.value, *[repr(v) for v in fv.values]])


def read_feature_csv(path) -> list[FeatureVector]:
    out = []
    with open(Path(path), newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != ["subject_id", "emotion", *FEATURE_COLUMNS]:
            raise EmptyInput(f"bad feature header: {header}")
        for row in reader:
            out.append(
                FeatureVector(row[0], Emotion(row[1]), tuple(float(v) for v in row[2:]))
            )
    return out

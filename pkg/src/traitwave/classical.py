"""Portfolio search over classical classifiers and the 56-model grid.

One model is searched and trained per (trait, emotion) pair; at prediction
time each trait uses the emotion model with the highest training accuracy
(ties broken by emotion order). Cross-validation accuracy is recorded for
analysis but plays no part in the selection rule.
"""

from __future__ import annotations

import base64
import csv
import json
import pickle
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import StratifiedKFold
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from .core import EMOTIONS, TRAITS, Emotion
from .errors import (
    DegenerateLabels,
    MissingEmotion,
    MissingEmotionFeatures,
    TooFewSamples,
)
from .estimators import GaussianNaiveBayes, L2LogisticRegression
from .features import extract_features

BUNDLE_FORMAT_VERSION = 1

FAMILIES = ("knn", "decision_tree", "logistic_regression", "gaussian_nb", "random_forest")


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: tuple[tuple[str, object], ...] = ()

    def params(self) -> dict:
        return dict(self.hyperparameters)

    def describe(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in self.hyperparameters)
        return f"{self.family}({inner})"

    def to_json(self) -> dict:
        return {"family": self.family, "hyperparameters": self.params()}

    @classmethod
    def from_json(cls, d: dict) -> "ModelSpec":
        return cls(d["family"], tuple(sorted(d["hyperparameters"].items())))


def _spec(family: str, **params) -> ModelSpec:
    return ModelSpec(family, tuple(sorted(params.items())))


def portfolio() -> list[ModelSpec]:
    """The fixed search grid, in canonical order (the tie-break order)."""
    specs = []
    for k in (1, 3, 5, 7):
        specs.append(_spec("knn", k=k))
    for depth in (2, 4, 8, None):
        for leaf in (1, 3, 5):
            specs.append(_spec("decision_tree", max_depth=depth, min_leaf=leaf))
    for l2 in (0.01, 0.1, 1.0, 10.0):
        specs.append(_spec("logistic_regression", l2=l2))
    specs.append(_spec("gaussian_nb"))
    for trees in (25, 100):
        for depth in (2, 4, 8, None):
            specs.append(_spec("random_forest", trees=trees, max_depth=depth))
    return specs


def complexity(spec: ModelSpec) -> int:
    """Tie-break key: specs with fewer hyperparameters win ties."""
    return len(spec.hyperparameters)


def build_estimator(spec: ModelSpec, seed: int = 0):
    p = spec.params()
    if spec.family == "knn":
        return KNeighborsClassifier(n_neighbors=p["k"])
    if spec.family == "decision_tree":
        return DecisionTreeClassifier(
            max_depth=p["max_depth"],
            min_samples_leaf=p["min_leaf"],
            random_state=seed % 2**32,
        )
    if spec.family == "logistic_regression":
        return L2LogisticRegression(l2=p["l2"])
    if spec.family == "gaussian_nb":
        return GaussianNaiveBayes()
    if spec.family == "random_forest":
        return RandomForestClassifier(
            n_estimators=p["trees"],
            max_depth=p["max_depth"],
            random_state=seed % 2**32,
        )
    raise ValueError(f"unknown family {spec.family!r}")


def _check_xy(X, y, folds):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if len(X) != len(y):
        raise ValueError("X and y length mismatch")
    if y.all() or (~y).all():
        raise DegenerateLabels("labels contain a single class")
    if len(y) < folds:
        raise TooFewSamples(f"{len(y)} samples for {folds} folds")
    return X, y


def cross_validate(spec: ModelSpec, X, y, folds: int = 5, seed: int = 0) -> float:
    """Mean held-fold accuracy over a seeded stratified k-fold partition."""
    X, y = _check_xy(X, y, folds)
    n_splits = min(folds, int(np.bincount(y.astype(int)).min()))
    if n_splits < 2:
        raise TooFewSamples("minority class too small to stratify")
    kfold = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=seed % 2**32)
    accs = []
    for train_idx, test_idx in kfold.split(X, y):
        est = build_estimator(spec, seed)
        est.fit(X[train_idx], y[train_idx])
        accs.append(float(np.mean(est.predict(X[test_idx]) == y[test_idx])))
    return float(np.mean(accs))


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: object  # fitted, immutable after training
    trait: str = ""
    emotion: Emotion | None = None
    training_accuracy: float = 0.0
    cv_accuracy: float = 0.0

    def predict_one(self, features) -> tuple[bool, float]:
        x = np.asarray(features, dtype=float).reshape(1, -1)
        proba = float(self.estimator.predict_proba(x)[0, 1])
        return proba >= 0.5, proba


def model_search(
    X,
    y,
    seed: int = 0,
    folds: int = 5,
    specs: list[ModelSpec] | None = None,
    max_evaluations: int | None = None,
) -> TrainedModel:
    """Evaluate the grid, pick argmax cv accuracy, refit the winner on all data.

    Ties go to the spec with fewer hyperparameters, then earlier grid order.
    """
    X, y = _check_xy(X, y, folds)
    candidates = list(specs) if specs is not None else portfolio()
    if max_evaluations is not None:
        candidates = candidates[:max_evaluations]
    best = None
    for order, spec in enumerate(candidates):
        cv = cross_validate(spec, X, y, folds=folds, seed=seed)
        key = (-cv, complexity(spec), order)
        if best is None or key < best[0]:
            best = (key, spec, cv)
    _, spec, cv = best
    est = build_estimator(spec, seed)
    est.fit(X, y)
    train_acc = float(np.mean(est.predict(X) == y))
    return TrainedModel(spec=spec, estimator=est, training_accuracy=train_acc, cv_accuracy=cv)


def grid_seed(seed: int, trait: str, emotion: Emotion) -> int:
    key = (TRAITS.index(trait), list(EMOTIONS).index(emotion))
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def training_matrices(records, split) -> dict[Emotion, tuple[list[str], np.ndarray]]:
    """Per-emotion (subject ids, feature matrix) for the train side only."""
    train_records = sorted(
        (r for r in records if r.subject_id in split.train), key=lambda r: r.subject_id
    )
    out = {}
    for emotion in EMOTIONS:
        ids = [r.subject_id for r in train_records]
        X = np.array(
            [extract_features(r.segments[emotion]).values for r in train_records], dtype=float
        )
        out[emotion] = (ids, X)
    return out


def train_grid(
    records,
    split,
    seed: int = 0,
    folds: int = 5,
    specs: list[ModelSpec] | None = None,
    n_jobs: int = 1,
) -> list[TrainedModel]:
    """One searched model per (trait, emotion): 14 x 4 = 56, trait-major order."""
    matrices = training_matrices(records, split)
    by_id = {r.subject_id: r for r in records}
    tasks = []
    for trait in TRAITS:
        for emotion in EMOTIONS:
            ids, X = matrices[emotion]
            y = np.array([by_id[i].labels[trait] for i in ids], dtype=bool)
            if y.all() or (~y).all():
                raise DegenerateLabels(trait)
            tasks.append((trait, emotion, X, y))

    def run(trait, emotion, X, y):
        model = model_search(X, y, seed=grid_seed(seed, trait, emotion), folds=folds, specs=specs)
        return replace(model, trait=trait, emotion=emotion)

    return Parallel(n_jobs=n_jobs)(delayed(run)(*t) for t in tasks)


@dataclass
class TraitSelector:
    """Per trait, the emotion model with the highest training accuracy."""

    models: dict[str, TrainedModel]

    def __post_init__(self):
        missing = [t for t in TRAITS if t not in self.models]
        if missing:
            raise MissingEmotion(f"selector missing traits: {missing}")


def select_per_trait(models: list[TrainedModel]) -> TraitSelector:
    """Argmax training accuracy per trait; ties go to earlier emotion order."""
    chosen: dict[str, TrainedModel] = {}
    grouped: dict[str, dict[Emotion, TrainedModel]] = {}
    for m in models:
        grouped.setdefault(m.trait, {})[m.emotion] = m
    for trait in TRAITS:
        per_emotion = grouped.get(trait, {})
        missing = [e.value for e in EMOTIONS if e not in per_emotion]
        if missing:
            raise MissingEmotion(f"trait {trait!r} missing emotions: {missing}")
        chosen[trait] = max(
            (per_emotion[e] for e in EMOTIONS),
            key=lambda m: (m.training_accuracy, -list(EMOTIONS).index(m.emotion)),
        )
    return TraitSelector(chosen)


@dataclass(frozen=True)
class TraitPrediction:
    trait: str
    value: bool
    probability: float


def predict_traits(selector: TraitSelector, features: dict[Emotion, object]) -> list[TraitPrediction]:
    """Predict all 14 traits from per-emotion feature vectors."""
    out = []
    for trait in TRAITS:
        model = selector.models[trait]
        if model.emotion not in features:
            raise MissingEmotionFeatures(
                f"trait {trait!r} needs features for {model.emotion.value}"
            )
        fv = features[model.emotion]
        values = getattr(fv, "values", fv)
        value, proba = model.predict_one(values)
        out.append(TraitPrediction(trait, value, proba))
    return out


def vote_predict_traits(models: list[TrainedModel], features: dict[Emotion, object]) -> list[TraitPrediction]:
    """Alternative fusion: majority vote across the four emotion models.

    Not the headline rule; kept behind this separate entry point.
    """
    grouped: dict[str, list[TrainedModel]] = {}
    for m in models:
        grouped.setdefault(m.trait, []).append(m)
    out = []
    for trait in TRAITS:
        votes, probas = [], []
        for m in sorted(grouped.get(trait, []), key=lambda m: list(EMOTIONS).index(m.emotion)):
            fv = features.get(m.emotion)
            if fv is None:
                raise MissingEmotionFeatures(f"trait {trait!r} needs {m.emotion.value}")
            v, p = m.predict_one(getattr(fv, "values", fv))
            votes.append(v)
            probas.append(p)
        if not votes:
            raise MissingEmotion(trait)
        value = sum(votes) * 2 > len(votes) or (sum(votes) * 2 == len(votes) and np.mean(probas) >= 0.5)
        out.append(TraitPrediction(trait, bool(value), float(np.mean(probas))))
    return out


# Serialization

def model_to_bundle(model: TrainedModel) -> dict:
    return {
        "format_version": BUNDLE_FORMAT_VERSION,
        "spec": model.spec.to_json(),
        "parameters": base64.b64encode(pickle.dumps(model.estimator)).decode("ascii"),
        "trait": model.trait,
        "emotion": model.emotion.value if model.emotion else None,
        "training_accuracy": model.training_accuracy,
        "cv_accuracy": model.cv_accuracy,
    }


def model_from_bundle(d: dict) -> TrainedModel:
    if d.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise ValueError(f"unsupported bundle version {d.get('format_version')}")
    return TrainedModel(
        spec=ModelSpec.from_json(d["spec"]),
        estimator=pickle.loads(base64.b64decode(d["parameters"])),
        trait=d["trait"],
        emotion=Emotion(d["emotion"]) if d["emotion"] else None,
        training_accuracy=d["training_accuracy"],
        cv_accuracy=d["cv_accuracy"],
    )


def save_grid(models: list[TrainedModel], directory) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for m in models:
        name = f"{m.trait}__{m.emotion.value}.json"
        (root / name).write_text(json.dumps(model_to_bundle(m), indent=2))
    with open(root / "accuracy_grid.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trait", "emotion", "family", "cv_accuracy", "training_accuracy"])
        for m in models:
            w.writerow(
                [m.trait, m.emotion.value, m.spec.family, f"{m.cv_accuracy:.6f}", f"{m.training_accuracy:.6f}"]
            )


def load_grid(directory) -> list[TrainedModel]:
    root = Path(directory)
    models = []
    for trait in TRAITS:
        for emotion in EMOTIONS:
            path = root / f"{trait}__{emotion.value}.json"
            if path.exists():
                models.append(model_from_bundle(json.loads(path.read_text())))
    return models


def save_selector(selector: TraitSelector, path) -> None:
    doc = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "models": {t: model_to_bundle(selector.models[t]) for t in TRAITS},
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_selector(path) -> TraitSelector:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise ValueError(f"unsupported selector version {doc.get('format_version')}")
    return TraitSelector({t: model_from_bundle(b) for t, b in doc["models"].items()})


def evaluate_heldout(selector: TraitSelector, records, split) -> dict[str, float]:
    """Per-trait accuracy of the selected models on the test-side subjects."""
    test_records = [r for r in records if r.subject_id in split.test]
    correct = {t: 0 for t in TRAITS}
    for rec in test_records:
        features = {e: extract_features(rec.segments[e]) for e in EMOTIONS}
        for pred in predict_traits(selector, features):
            if pred.value == rec.labels[pred.trait]:
                correct[pred.trait] += 1
    n = len(test_records)
    return {t: correct[t] / n for t in TRAITS} if n else {}

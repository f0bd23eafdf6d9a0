"""Command-line interface.

Pipeline commands mirror the library stages: simulate a cohort, decode wire
captures, extract features, compute band statistics, train and select trait
models, predict from captures, evaluate held-out accuracy, and serve the
session API. Usage errors exit with status 2 (standard option parsing);
data errors (bad files, degenerate inputs) exit with status 1.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import __version__
from .classical import (
    ModelSpec,
    evaluate_heldout,
    load_grid,
    load_selector,
    portfolio,
    predict_traits,
    save_grid,
    save_selector,
    select_per_trait,
    train_grid,
)
from .codec import EegPower, decode_bytes
from .core import BANDS, EMOTIONS, TRAITS, BandPowerRow, Segment
from .dataset import export, ingest, load_split, save_split, split_80_20
from .deep import TrainConfig, save_model, train as train_sequence, write_loss_curve
from .errors import TraitwaveError
from .features import (
    band_emotion_report,
    extract_features,
    report_to_json,
    write_feature_csv,
)
from .simulator import (
    DEFAULT_DURATION_S,
    DEFAULT_ROWS_PER_SECOND,
    EffectConfig,
    cohort_records,
    sample_cohort,
    segment_to_wire,
    write_manifest,
)


def _fail(exc: Exception) -> "click.ClickException":
    return click.ClickException(str(exc) or type(exc).__name__)


@click.group()
@click.version_option(__version__)
def main():
    """Brainwave band-power trait identification toolkit."""


@main.command()
@click.option("--subjects", type=click.IntRange(min=1), default=80, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--effect-scale", type=float, default=1.0, show_default=True)
@click.option("--duration-s", type=click.IntRange(min=1), default=DEFAULT_DURATION_S, show_default=True)
@click.option("--rows-per-second", type=click.IntRange(min=1), default=DEFAULT_ROWS_PER_SECOND, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
def simulate(subjects, seed, effect_scale, duration_s, rows_per_second, out_dir):
    """Generate a synthetic cohort: labels, band rows, and wire captures.

    Writes labels.jsonl + segments.csv, a profile manifest, and one .tgr
    capture per (subject, emotion) segment under captures/.
    """
    try:
        profiles = sample_cohort(subjects, EffectConfig(scale=effect_scale), seed)
        records = cohort_records(profiles, duration_s, rows_per_second, seed)
        export(records, out_dir)
        write_manifest(profiles, out_dir / "manifest.jsonl")
        captures = out_dir / "captures"
        captures.mkdir(parents=True, exist_ok=True)
        n = 0
        for record in records:
            for emotion in EMOTIONS:
                seg = record.segments[emotion]
                (captures / f"{record.subject_id}_{emotion.value}.tgr").write_bytes(
                    segment_to_wire(seg)
                )
                n += 1
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    click.echo(f"wrote {subjects} subjects, {n} segment captures to {out_dir}")


@main.command()
@click.argument("capture", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="CSV destination (default: stdout)")
def decode(capture, out_path):
    """Decode a .tgr capture to band-power rows (CSV).

    Frame errors are reported on stderr and do not stop decoding.
    """
    try:
        events, errors = decode_bytes(capture.read_bytes())
    except OSError as exc:
        raise _fail(exc)
    rows = [e.bands for e in events if isinstance(e, EegPower)]
    target = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        writer = csv.writer(target)
        writer.writerow(["row", *BANDS])
        for i, bands in enumerate(rows):
            writer.writerow([i, *bands])
    finally:
        if out_path:
            target.close()
    for err in errors:
        click.echo(f"frame error at byte {err.offset}: {err.kind}", err=True)
    click.echo(f"decoded {len(rows)} rows, {len(errors)} frame errors", err=True)


@main.command()
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--relative", is_flag=True, help="Use relative band powers")
def featurize(data_dir, out_path, relative):
    """Extract per-segment mean/std features from an exported dataset."""
    try:
        records = ingest(data_dir)
        vectors = [
            extract_features(r.segments[e], relative=relative)
            for r in records
            for e in EMOTIONS
        ]
        write_feature_csv(vectors, out_path)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    click.echo(f"wrote {len(vectors)} feature vectors to {out_path}")


@main.command()
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="JSON destination (default: stdout)")
def stats(data_dir, out_path):
    """Boxplot statistics of per-segment band means, per band and emotion."""
    try:
        records = ingest(data_dir)
        report = band_emotion_report(records)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    text = report_to_json(report)
    if out_path:
        out_path.write_text(text + "\n")
        click.echo(f"wrote band statistics to {out_path}")
    else:
        click.echo(text)


@main.command()
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--folds", type=click.IntRange(min=2), default=5, show_default=True)
@click.option("--n-jobs", type=int, default=1, show_default=True)
@click.option("--quick", is_flag=True,
              help="Search a minimal model portfolio (for smoke runs)")
@click.option("--deep", is_flag=True,
              help="Also train sequence models (LSTM and BiLSTM) for --deep-trait")
@click.option("--deep-trait", type=click.Choice(TRAITS), default=TRAITS[0], show_default=True)
@click.option("--deep-epochs", type=click.IntRange(min=1), default=50, show_default=True)
def train(data_dir, out_dir, seed, folds, n_jobs, quick, deep, deep_trait, deep_epochs):
    """Train the full trait-by-emotion model grid on the 80% train split.

    Writes one model bundle per (trait, emotion), accuracy_grid.csv, and
    split.json. Sequence models are opt-in via --deep.
    """
    try:
        records = ingest(data_dir)
        split = split_80_20(records, seed)
        specs = [ModelSpec("gaussian_nb", ())] if quick else portfolio()
        models = train_grid(records, split, seed=seed, folds=folds, specs=specs, n_jobs=n_jobs)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_grid(models, out_dir)
        save_split(split, out_dir / "split.json")
        if deep:
            _train_deep(records, split, deep_trait, deep_epochs, seed, out_dir)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    click.echo(f"trained {len(models)} models to {out_dir}")


def _train_deep(records, split, trait, epochs, seed, out_dir):
    import numpy as np

    train_records = sorted(
        (r for r in records if r.subject_id in split.train), key=lambda r: r.subject_id
    )
    X = np.array(
        [r.segments[e].band_matrix() for r in train_records for e in EMOTIONS]
    )
    y = np.array([r.labels[trait] for r in train_records for _ in EMOTIONS], dtype=bool)
    scale = np.maximum(X.std(axis=(0, 1)), 1e-9)
    X = (X - X.mean(axis=(0, 1))) / scale
    for kind in ("lstm", "bilstm"):
        model = train_sequence(kind, X, y, TrainConfig(epochs=epochs, seed=seed))
        save_model(model, out_dir / f"{kind}_{trait}.json")
        write_loss_curve(model, out_dir / f"{kind}_{trait}_curve.csv")


@main.command()
@click.argument("models_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
def select(models_dir, out_path):
    """Pick, per trait, the emotion model with the highest training accuracy."""
    try:
        models = load_grid(models_dir)
        selector = select_per_trait(models)
        save_selector(selector, out_path)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    click.echo(f"selected {len(selector.models)} trait models to {out_path}")


@main.command()
@click.option("--selector", "selector_path",
              type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.argument("capture_files", nargs=-1,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
def predict(selector_path, capture_files):
    """Predict the 14 traits from four per-emotion .tgr captures.

    Pass the four capture files as arguments in emotion order
    (happy sad neutral meditation). Prints predictions as JSON.
    """
    files = list(capture_files)
    if len(files) != len(EMOTIONS):
        raise click.UsageError(
            f"need exactly {len(EMOTIONS)} capture files (happy sad neutral meditation)"
        )
    try:
        selector = load_selector(selector_path)
        features = {}
        for emotion, path in zip(EMOTIONS, files):
            events, _errors = decode_bytes(Path(path).read_bytes())
            rows = [
                BandPowerRow(timestamp_ms=i * 1000, bands=e.bands)
                for i, e in enumerate(events)
                if isinstance(e, EegPower)
            ]
            seg = Segment(subject_id="capture", emotion=emotion, rows=rows)
            features[emotion] = extract_features(seg)
        preds = predict_traits(selector, features)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    click.echo(
        json.dumps(
            [
                {"trait": p.trait, "value": bool(p.value), "probability": p.probability}
                for p in preds
            ],
            indent=2,
        )
    )


@main.command()
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--selector", "selector_path",
              type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--split", "split_path",
              type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="JSON destination (default: stdout)")
def evaluate(data_dir, selector_path, split_path, out_path):
    """Per-trait accuracy of selected models on the held-out 20% subjects."""
    try:
        records = ingest(data_dir)
        selector = load_selector(selector_path)
        split = load_split(split_path)
        per_trait = evaluate_heldout(selector, records, split)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)
    doc = {
        "per_trait": per_trait,
        "mean_accuracy": sum(per_trait.values()) / len(per_trait),
        "n_test_subjects": len(split.test),
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out_path:
        out_path.write_text(text + "\n")
        click.echo(f"wrote evaluation to {out_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--selector", "selector_path",
              type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(selector_path, data_dir, host, port):
    """Run the HTTP/WebSocket session service."""
    from .service import run_server

    try:
        run_server(selector_path, data_dir, host=host, port=port)
    except (TraitwaveError, ValueError, OSError) as exc:
        raise _fail(exc)


if __name__ == "__main__":
    main()

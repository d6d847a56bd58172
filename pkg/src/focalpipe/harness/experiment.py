"""Experiment orchestration: sub-dataset construction, stratified splits,
repeated classification/authentication runs, and report emission.

Randomness follows a master-seed hierarchy: master -> per-(p, repeat) for
category subsets and splits -> per-classifier for training, so adding a
classifier never perturbs another cell. Cells are independent jobs merged
by key, which keeps reports byte-identical at any thread count.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..authentication import AuthModel, ThetaCondition, authenticate, build_tp_profiles
from ..classifiers.evaluate import evaluate
from ..classifiers.forest import DEFAULT_N_TREES, train_forest
from ..classifiers.neural import train_nn
from ..classifiers.tree import train_pruned_tree
from ..classifiers.wnd import build_wnd_model
from ..errors import CategoryOverlap, CountOutOfRange, TooFewSamples
from ..features.extract import FeatureMatrix
from ..selection import SelectionConfig, apply_normalization, fisher_scores, fit_normalization, select_top

REPORT_FORMAT_VERSION = "1"

CLASSIFIER_IDS = {"wnd5": 1, "dt": 2, "rf": 3, "nn": 4}
SELECTED_FEATURE_CLASSIFIERS = ("wnd5", "nn")


@dataclass(frozen=True)
class ExperimentConfig:
    p_range: tuple[int, ...] = tuple(range(2, 16))
    repeats: int = 10
    train_fraction: float = 0.75
    seed: int = 0
    classifiers: tuple[str, ...] = ("wnd5", "dt", "rf", "nn")
    feature_fractions: tuple[float, ...] = (0.02,)
    n_trees: int = DEFAULT_N_TREES
    nn_epochs: int = 300
    threads: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        unknown = [c for c in self.classifiers if c not in CLASSIFIER_IDS]
        if unknown:
            raise ValueError(f"unknown classifiers: {unknown}")


@dataclass(frozen=True)
class CellResult:
    p: int
    repeat: int
    classifier: str
    n_features: int
    accuracy: float

    def key(self):
        return (self.p, self.repeat, CLASSIFIER_IDS[self.classifier], self.n_features)


@dataclass(frozen=True)
class AuthCellResult:
    p: int
    repeat: int
    condition: str
    alpha_in: float
    alpha_out: float
    n_inliers: int
    n_outliers: int

    def key(self):
        return (self.p, self.repeat, self.condition)


@dataclass
class Report:
    kind: str                       # "classification" or "authentication"
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def aggregates(self) -> list[dict]:
        groups: dict[tuple, list] = {}
        if self.kind == "classification":
            for r in self.rows:
                groups.setdefault((r.classifier, r.n_features, r.p), []).append(r.accuracy)
            return [
                {
                    "classifier": clf,
                    "n_features": nf,
                    "p": p,
                    "mean_accuracy": float(np.mean(vals)),
                    "sd_accuracy": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                    "repeats": len(vals),
                }
                for (clf, nf, p), vals in sorted(groups.items())
            ]
        for r in self.rows:
            groups.setdefault((r.condition, r.p), []).append((r.alpha_in, r.alpha_out))
        return [
            {
                "condition": cond,
                "p": p,
                "mean_alpha_in": float(np.mean([v[0] for v in vals])),
                "mean_alpha_out": float(np.mean([v[1] for v in vals])),
                "repeats": len(vals),
            }
            for (cond, p), vals in sorted(groups.items())
        ]


def build_subdataset(categories: tuple[str, ...], p: int, rng: np.random.Generator) -> tuple[str, ...]:
    """Uniform random p-subset of the categories; p equal to the full count
    selects everything."""
    if p < 1 or p > len(categories):
        raise CountOutOfRange(f"p={p} outside [1, {len(categories)}]")
    if p == len(categories):
        return tuple(categories)
    chosen = rng.choice(len(categories), size=p, replace=False)
    return tuple(categories[i] for i in sorted(chosen))


def split_dataset(
    matrix: FeatureMatrix, train_fraction: float, rng: np.random.Generator
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Stratified random split; the test share rounds down but keeps at
    least one sample per category so both sides stay populated."""
    labels = np.array(matrix.labels)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cat in matrix.categories:
        rows = np.nonzero(labels == cat)[0]
        if len(rows) < 2:
            raise TooFewSamples(f"category {cat} has {len(rows)} rows; need >= 2")
        n_test = max(1, int(np.floor(len(rows) * (1.0 - train_fraction))))
        shuffled = rows[rng.permutation(len(rows))]
        test_idx.extend(shuffled[:n_test])
        train_idx.extend(shuffled[n_test:])
    return (
        matrix.subset_rows(np.array(sorted(train_idx))),
        matrix.subset_rows(np.array(sorted(test_idx))),
    )


def _subset_by_labels(matrix: FeatureMatrix, cats: tuple[str, ...]) -> FeatureMatrix:
    keep = np.array([lb in cats for lb in matrix.labels])
    return matrix.subset_rows(np.nonzero(keep)[0])


def _classifier_seed(cfg: ExperimentConfig, p: int, repeat: int, name: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed, spawn_key=(p, repeat, CLASSIFIER_IDS[name]))


def _train_and_score(name, train, test, cfg, seed_seq, fraction):
    """One classifier cell. WND-5 and the network run on normalized,
    Fisher-selected features; trees and forests consume all raw features."""
    if name in SELECTED_FEATURE_CLASSIFIERS:
        norm = fit_normalization(train)
        train_n = apply_normalization(train, norm)
        test_n = apply_normalization(test, norm)
        scores = fisher_scores(train_n)
        idx = select_top(scores, SelectionConfig(fraction=fraction))
        train_s, test_s = train_n.subset_columns(idx), test_n.subset_columns(idx)
        if name == "wnd5":
            model = build_wnd_model(train_s, scores.scores[idx])
        else:
            model = train_nn(train_s, epochs=cfg.nn_epochs)
        accuracy, _ = evaluate(model, test_s)
        return len(idx), accuracy
    if name == "dt":
        model = train_pruned_tree(train, seed=seed_seq)
    else:
        model = train_forest(train, n_trees=cfg.n_trees, seed=seed_seq)
    accuracy, _ = evaluate(model, test)
    return train.n_features, accuracy


def _classification_cell(matrix: FeatureMatrix, cfg: ExperimentConfig, p: int, repeat: int):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(p, repeat)))
    cats = build_subdataset(matrix.categories, p, rng)
    sub = _subset_by_labels(matrix, cats)
    train, test = split_dataset(sub, cfg.train_fraction, rng)
    out = []
    for name in cfg.classifiers:
        fractions = cfg.feature_fractions if name in SELECTED_FEATURE_CLASSIFIERS else (None,)
        for fraction in fractions:
            n_feat, acc = _train_and_score(
                name, train, test, cfg, _classifier_seed(cfg, p, repeat, name), fraction
            )
            out.append(CellResult(p=p, repeat=repeat, classifier=name,
                                  n_features=n_feat, accuracy=acc))
    return out


def _run_cells(worker, cells, threads: int):
    if threads <= 1:
        batches = [worker(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(worker, cells))
    rows = [r for batch in batches for r in batch]
    rows.sort(key=lambda r: r.key())
    return rows


def run_classification_experiment(matrix: FeatureMatrix, cfg: ExperimentConfig) -> Report:
    """Accuracy of every configured classifier over the (p, repeat) grid."""
    if max(cfg.p_range) > len(matrix.categories):
        raise CountOutOfRange(
            f"p up to {max(cfg.p_range)} requested but only {len(matrix.categories)} categories exist"
        )
    cells = [(p, r) for p in cfg.p_range for r in range(cfg.repeats)]
    rows = _run_cells(lambda c: _classification_cell(matrix, cfg, *c), cells, cfg.threads)
    return Report(kind="classification", rows=rows, config=_echo_config(cfg))


def _auth_cell(train_matrix, inlier_matrix, outlier_matrix, cfg, p, repeat):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(p, repeat)))
    cats = build_subdataset(train_matrix.categories, p, rng)
    sub = _subset_by_labels(train_matrix, cats)
    train, test = split_dataset(sub, cfg.train_fraction, rng)
    forest = train_forest(train, n_trees=cfg.n_trees, seed=_classifier_seed(cfg, p, repeat, "rf"))
    profiles = build_tp_profiles(forest, test)
    inliers = _subset_by_labels(inlier_matrix, cats)  # only currently trained categories
    out = []
    for condition in ThetaCondition:
        model = AuthModel(forest=forest, profiles=profiles, condition=condition)
        accepted_correct = sum(
            1
            for label, row in zip(inliers.labels, inliers.values)
            if (d := authenticate(model, row)).is_inlier and d.category == label
        )
        rejected = sum(
            1 for row in outlier_matrix.values if not authenticate(model, row).is_inlier
        )
        out.append(
            AuthCellResult(
                p=p,
                repeat=repeat,
                condition=condition.value,
                alpha_in=accepted_correct / inliers.n_samples if inliers.n_samples else 0.0,
                alpha_out=rejected / outlier_matrix.n_samples,
                n_inliers=inliers.n_samples,
                n_outliers=outlier_matrix.n_samples,
            )
        )
    return out


def run_authentication_experiment(
    train_matrix: FeatureMatrix,
    inlier_matrix: FeatureMatrix,
    outlier_matrix: FeatureMatrix,
    cfg: ExperimentConfig,
) -> Report:
    """Train a forest per (p, repeat), build TP profiles on its testing
    split, and score all four theta conditions on fresh inlier samples and
    on the outlier set."""
    overlap = set(outlier_matrix.categories) & set(train_matrix.categories)
    if overlap:
        raise CategoryOverlap(f"outlier categories overlap training: {sorted(overlap)}")
    if max(cfg.p_range) > len(train_matrix.categories):
        raise CountOutOfRange("p exceeds available training categories")
    cells = [(p, r) for p in cfg.p_range for r in range(cfg.repeats)]
    rows = _run_cells(
        lambda c: _auth_cell(train_matrix, inlier_matrix, outlier_matrix, cfg, *c),
        cells,
        cfg.threads,
    )
    return Report(kind="authentication", rows=rows, config=_echo_config(cfg))


def _echo_config(cfg: ExperimentConfig) -> dict:
    return {
        "p_range": list(cfg.p_range),
        "repeats": cfg.repeats,
        "train_fraction": cfg.train_fraction,
        "seed": cfg.seed,
        "classifiers": list(cfg.classifiers),
        "feature_fractions": list(cfg.feature_fractions),
        "n_trees": cfg.n_trees,
        "nn_epochs": cfg.nn_epochs,
    }


_CLS_HEADER = ["p", "repeat", "classifier", "n_features", "accuracy"]
_AUTH_HEADER = ["p", "repeat", "condition", "alpha_in", "alpha_out", "n_inliers", "n_outliers"]


def emit_report(report: Report, outdir: str | Path, elapsed_seconds: float | None = None) -> None:
    """Write report.csv, summary.json and plot-ready per-figure CSVs.

    Wall-clock timing goes to a separate timing.json sidecar so the report
    artifacts stay byte-identical across reruns with the same seed.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    with (outdir / "report.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        if report.kind == "classification":
            writer.writerow(_CLS_HEADER)
            for r in report.rows:
                writer.writerow([r.p, r.repeat, r.classifier, r.n_features, repr(r.accuracy)])
        else:
            writer.writerow(_AUTH_HEADER)
            for r in report.rows:
                writer.writerow(
                    [r.p, r.repeat, r.condition, repr(r.alpha_in), repr(r.alpha_out),
                     r.n_inliers, r.n_outliers]
                )

    summary = {
        "format_version": REPORT_FORMAT_VERSION,
        "kind": report.kind,
        "config": report.config,
        "aggregates": report.aggregates(),
        "n_rows": len(report.rows),
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))

    aggs = report.aggregates()
    if report.kind == "classification":
        with (outdir / "accuracy_vs_p.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["classifier", "n_features", "p", "mean_accuracy", "sd_accuracy"])
            for a in aggs:
                writer.writerow([a["classifier"], a["n_features"], a["p"],
                                 repr(a["mean_accuracy"]), repr(a["sd_accuracy"])])
        with (outdir / "accuracy_vs_nf.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["classifier", "n_features", "mean_accuracy"])
            by_nf: dict[tuple, list] = {}
            for a in aggs:
                by_nf.setdefault((a["classifier"], a["n_features"]), []).append(a["mean_accuracy"])
            for (clf, nf), vals in sorted(by_nf.items()):
                writer.writerow([clf, nf, repr(float(np.mean(vals)))])
    else:
        with (outdir / "auth_vs_p.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["condition", "p", "mean_alpha_in", "mean_alpha_out"])
            for a in aggs:
                writer.writerow([a["condition"], a["p"],
                                 repr(a["mean_alpha_in"]), repr(a["mean_alpha_out"])])

    if elapsed_seconds is not None:
        (outdir / "timing.json").write_text(
            json.dumps({"elapsed_seconds": elapsed_seconds, "written_at": time.time()})
        )


def load_report(outdir: str | Path) -> Report:
    """Rebuild a Report from emit_report output (exact float round-trip)."""
    outdir = Path(outdir)
    summary = json.loads((outdir / "summary.json").read_text())
    kind = summary["kind"]
    rows = []
    with (outdir / "report.csv").open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for line in reader:
            if kind == "classification":
                rows.append(CellResult(p=int(line[0]), repeat=int(line[1]), classifier=line[2],
                                       n_features=int(line[3]), accuracy=float(line[4])))
            else:
                rows.append(AuthCellResult(p=int(line[0]), repeat=int(line[1]), condition=line[2],
                                           alpha_in=float(line[3]), alpha_out=float(line[4]),
                                           n_inliers=int(line[5]), n_outliers=int(line[6])))
    return Report(kind=kind, rows=rows, config=summary["config"])

"""Feature normalization to [0, 100], Fisher discriminant scoring, and
rank-based selection of the strongest features."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CountOutOfRange, DimensionMismatch, EmptyMatrix, TooFewCategories
from .features.extract import FeatureMatrix

SELECTION_FORMAT_VERSION = "1"

FISHER_CAP = 1e12
_DEGENERATE = 1e-12


@dataclass(frozen=True, eq=False)
class NormParams:
    """Per-feature training min/max used for the [0, 100] rescale."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.ascontiguousarray(self.mins, dtype=np.float64)
        maxs = np.ascontiguousarray(self.maxs, dtype=np.float64)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("mins and maxs must be matching 1-D arrays")
        if np.any(mins > maxs):
            raise ValueError("every min must be <= its max")
        mins.flags.writeable = False
        maxs.flags.writeable = False
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)


@dataclass(frozen=True, eq=False)
class FisherScores:
    scores: np.ndarray
    capped: np.ndarray  # bool per feature: zero-denominator cap applied

    def __post_init__(self):
        s = np.ascontiguousarray(self.scores, dtype=np.float64)
        c = np.ascontiguousarray(self.capped, dtype=bool)
        s.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "capped", c)


@dataclass(frozen=True)
class SelectionConfig:
    """Either a fraction of the catalog or an explicit feature count."""

    fraction: float | None = 0.02
    count: int | None = None

    def resolve(self, n_features: int) -> int:
        if self.count is not None:
            n = self.count
        else:
            if self.fraction is None or not (0.0 < self.fraction <= 1.0):
                raise CountOutOfRange("fraction must lie in (0, 1]")
            n = max(1, round(self.fraction * n_features))
        if n < 1 or n > n_features:
            raise CountOutOfRange(f"selection count {n} outside [1, {n_features}]")
        return n


def fit_normalization(train: FeatureMatrix) -> NormParams:
    if train.n_samples < 1:
        raise EmptyMatrix("normalization needs at least one row")
    return NormParams(mins=train.values.min(axis=0), maxs=train.values.max(axis=0))


def apply_normalization(m: FeatureMatrix, p: NormParams) -> FeatureMatrix:
    """Map each feature to 100 * (v - min) / (max - min), clamped to [0, 100];
    constant training features map to 0."""
    if m.n_features != p.mins.shape[0]:
        raise DimensionMismatch(f"matrix has {m.n_features} features, params {p.mins.shape[0]}")
    span = p.maxs - p.mins
    safe_span = np.where(span > 0, span, 1.0)
    scaled = 100.0 * (m.values - p.mins) / safe_span
    scaled = np.where(span > 0, scaled, 0.0)
    return FeatureMatrix(
        values=np.clip(scaled, 0.0, 100.0),
        labels=m.labels,
        ids=m.ids,
        feature_names=m.feature_names,
    )


def fisher_scores(m: FeatureMatrix) -> FisherScores:
    """Per-feature ratio of between-category to within-category variance,
    times N/(N-1) with N the number of categories.

    Degenerate denominators map to 0 (constant feature) or the cap value
    (perfect separator).
    """
    cats = m.categories
    if len(cats) < 2:
        raise TooFewCategories("Fisher scores need at least two categories")
    overall = m.values.mean(axis=0)
    numerator = np.zeros(m.n_features)
    denominator = np.zeros(m.n_features)
    for cat in cats:
        rows = m.rows_for(cat)
        cat_mean = rows.mean(axis=0)
        numerator += (overall - cat_mean) ** 2
        denominator += rows.var(axis=0)  # population variance within category

    n = len(cats)
    correction = n / (n - 1)
    scores = np.zeros(m.n_features)
    capped = np.zeros(m.n_features, dtype=bool)
    ok = denominator >= _DEGENERATE
    scores[ok] = numerator[ok] / denominator[ok] * correction
    degenerate = ~ok & (numerator >= _DEGENERATE)
    scores[degenerate] = FISHER_CAP
    capped[degenerate] = True
    return FisherScores(scores=scores, capped=capped)


def select_top(s: FisherScores, c: SelectionConfig) -> np.ndarray:
    """Indices of the strongest features, score-descending, ties to the
    lower catalog index."""
    n = c.resolve(s.scores.shape[0])
    order = np.lexsort((np.arange(s.scores.shape[0]), -s.scores))
    return order[:n]


def save_selection(
    path: str | Path,
    names: list[str],
    indices: np.ndarray,
    scores: FisherScores,
    norm: NormParams,
) -> None:
    payload = {
        "format_version": SELECTION_FORMAT_VERSION,
        "selected": [
            {"index": int(i), "name": names[int(i)], "score": float(scores.scores[int(i)]),
             "capped": bool(scores.capped[int(i)])}
            for i in indices
        ],
        "normalization": {"min": [float(v) for v in norm.mins], "max": [float(v) for v in norm.maxs]},
        "feature_names": list(names),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def load_selection(path: str | Path) -> tuple[np.ndarray, NormParams, list[str]]:
    payload = json.loads(Path(path).read_text())
    indices = np.array([e["index"] for e in payload["selected"]], dtype=int)
    norm = NormParams(
        mins=np.array(payload["normalization"]["min"]),
        maxs=np.array(payload["normalization"]["max"]),
    )
    return indices, norm, list(payload["feature_names"])

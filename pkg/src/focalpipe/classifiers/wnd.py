"""Weighted neighbor distance classifier with exponent -5.

For a test vector z and category c the score is the mean over training
vectors t of (sum_f W_f (z_f - t_f)^2) ** p. With p = -5 the quantity grows
as samples get closer, so the winning category takes the argmax; a config
flag restores the literal smallest-value reading for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import UnknownCategory
from ..features.extract import FeatureMatrix

WND_EXPONENT = -5
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class WndModel:
    categories: tuple[str, ...]
    groups: dict[str, np.ndarray]  # per-category training rows (selected features)
    weights: np.ndarray            # Fisher scores of the selected features
    exponent: int = WND_EXPONENT
    similarity_rule: bool = True   # argmax semantics; False = literal argmin

    def classify(self, z: np.ndarray) -> str:
        return wnd5_classify(z, self)


def build_wnd_model(
    train: FeatureMatrix,
    weights: np.ndarray,
    exponent: int = WND_EXPONENT,
    similarity_rule: bool = True,
) -> WndModel:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != train.n_features:
        raise ValueError("one weight per (selected) feature is required")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    cats = train.categories
    groups = {c: np.array(train.rows_for(c)) for c in cats}
    if any(len(g) == 0 for g in groups.values()):
        raise ValueError("every category needs at least one training row")
    return WndModel(categories=cats, groups=groups, weights=weights,
                    exponent=exponent, similarity_rule=similarity_rule)


def wnd5_distance(z: np.ndarray, model: WndModel, category: str) -> float:
    """Mean powered weighted distance from z to the category's training rows.

    The weighted squared distance is floored at 1e-12 so exact matches are
    maximally similar instead of dividing by zero.
    """
    if category not in model.groups:
        raise UnknownCategory(category)
    rows = model.groups[category]
    z = np.asarray(z, dtype=np.float64)
    d2 = ((z[None, :] - rows) ** 2 * model.weights[None, :]).sum(axis=1)
    d2 = np.maximum(d2, DISTANCE_FLOOR)
    return float(np.mean(d2**model.exponent))


def wnd5_classify(z: np.ndarray, model: WndModel) -> str:
    """Winning category; ties break to the lowest category index."""
    scores = np.array([wnd5_distance(z, model, c) for c in model.categories])
    best = int(np.argmax(scores)) if model.similarity_rule else int(np.argmin(scores))
    return model.categories[best]

"""Open-set authentication over random-forest vote tallies.

Per-category true-positive vote profiles are collected on a testing split;
four threshold conditions decide whether an unknown sample is an inlier of
the winning category or an outlier:

  theta11: winner votes exceed the minimum true-positive votes
  theta12: theta11 AND the winner-minus-runner-up margin exceeds the
           minimum recorded true-positive margin
  theta21: winner votes exceed mean - std of the true-positive votes
  theta22: theta21 AND the margin clause of theta12

All inequalities are strict. The margin clause reads the paper-style
difference of vote sets as the per-sample winner-minus-runner-up margin,
the only size-consistent interpretation.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .classifiers.forest import ForestModel, VoteTally, forest_votes
from .errors import EmptyMatrix, MissingProfile
from .features.extract import FeatureMatrix

log = logging.getLogger(__name__)


class ThetaCondition(enum.Enum):
    THETA11 = "theta11"
    THETA12 = "theta12"
    THETA21 = "theta21"
    THETA22 = "theta22"


@dataclass(frozen=True)
class TpVoteProfile:
    """Winning vote counts and winner-minus-runner-up margins of correctly
    classified testing samples, grouped by true category."""

    votes: dict[str, np.ndarray]
    margins: dict[str, np.ndarray]

    def has_category(self, category: str) -> bool:
        return category in self.votes and self.votes[category].size > 0


@dataclass(frozen=True)
class AuthModel:
    forest: ForestModel
    profiles: TpVoteProfile
    condition: ThetaCondition = ThetaCondition.THETA21

    def __post_init__(self):
        uncovered = [c for c in self.forest.categories if not self.profiles.has_category(c)]
        if uncovered:
            log.warning("authentication disabled for categories without profiles: %s", uncovered)


@dataclass(frozen=True)
class AuthDecision:
    is_inlier: bool
    category: str | None  # winning category when inlier, None otherwise
    diagnostics: dict


def build_tp_profiles(forest: ForestModel, test: FeatureMatrix) -> TpVoteProfile:
    """Record (winner votes, margin) for every correctly classified test
    sample under its true category; misclassified samples contribute nothing."""
    if test.n_samples < 1:
        raise EmptyMatrix("profile construction needs test samples")
    votes: dict[str, list[int]] = {c: [] for c in forest.categories}
    margins: dict[str, list[int]] = {c: [] for c in forest.categories}
    for label, row in zip(test.labels, test.values):
        tally = forest_votes(forest, row)
        win_idx, win_votes, second = tally.top_two()
        if tally.categories[win_idx] == label:
            votes[label].append(win_votes)
            margins[label].append(win_votes - second)
    return TpVoteProfile(
        votes={c: np.array(v, dtype=np.int64) for c, v in votes.items()},
        margins={c: np.array(v, dtype=np.int64) for c, v in margins.items()},
    )


def _winner(tally: VoteTally) -> tuple[str, int, int]:
    idx, win_votes, second = tally.top_two()
    return tally.categories[idx], win_votes, second


def theta11(tally: VoteTally, profiles: TpVoteProfile) -> bool:
    cat, win_votes, _ = _winner(tally)
    if not profiles.has_category(cat):
        raise MissingProfile(cat)
    return win_votes > int(profiles.votes[cat].min())


def _margin_clause(tally: VoteTally, profiles: TpVoteProfile) -> bool:
    cat, win_votes, second = _winner(tally)
    if not profiles.has_category(cat):
        raise MissingProfile(cat)
    return (win_votes - second) > int(profiles.margins[cat].min())


def theta12(tally: VoteTally, profiles: TpVoteProfile) -> bool:
    return theta11(tally, profiles) and _margin_clause(tally, profiles)


def theta21(tally: VoteTally, profiles: TpVoteProfile) -> bool:
    """Winner votes > mean(TP) - std(TP), sample standard deviation.

    Profiles with fewer than two entries cannot define a std; those fall
    back to theta11 with a warning.
    """
    cat, win_votes, _ = _winner(tally)
    if not profiles.has_category(cat):
        raise MissingProfile(cat)
    tp = profiles.votes[cat]
    if tp.size < 2:
        log.warning("category %s has %d profile entries; theta21 falls back to theta11", cat, tp.size)
        return theta11(tally, profiles)
    threshold = float(tp.mean()) - float(tp.std(ddof=1))
    return win_votes > threshold


def theta22(tally: VoteTally, profiles: TpVoteProfile) -> bool:
    return theta21(tally, profiles) and _margin_clause(tally, profiles)


_CONDITIONS = {
    ThetaCondition.THETA11: theta11,
    ThetaCondition.THETA12: theta12,
    ThetaCondition.THETA21: theta21,
    ThetaCondition.THETA22: theta22,
}


def evaluate_condition(condition: ThetaCondition, tally: VoteTally, profiles: TpVoteProfile) -> bool:
    return _CONDITIONS[condition](tally, profiles)


def authenticate(model: AuthModel, z: np.ndarray) -> AuthDecision:
    """Classify with the forest, then accept as inlier only if the configured
    condition holds. A winner without profile data is an outlier by
    convention (conservative default)."""
    tally = forest_votes(model.forest, z)
    cat, win_votes, second = _winner(tally)
    diagnostics = {
        "winner": cat,
        "vp1": win_votes,
        "vp2": second,
        "condition": model.condition.value,
    }
    if profiles_threshold := _threshold_description(model, cat):
        diagnostics["threshold"] = profiles_threshold
    try:
        accepted = evaluate_condition(model.condition, tally, model.profiles)
    except MissingProfile:
        diagnostics["missing_profile"] = True
        return AuthDecision(is_inlier=False, category=None, diagnostics=diagnostics)
    if accepted:
        return AuthDecision(is_inlier=True, category=cat, diagnostics=diagnostics)
    return AuthDecision(is_inlier=False, category=None, diagnostics=diagnostics)


def _threshold_description(model: AuthModel, category: str) -> float | None:
    if not model.profiles.has_category(category):
        return None
    tp = model.profiles.votes[category]
    if model.condition in (ThetaCondition.THETA21, ThetaCondition.THETA22) and tp.size >= 2:
        return float(tp.mean()) - float(tp.std(ddof=1))
    return float(tp.min())

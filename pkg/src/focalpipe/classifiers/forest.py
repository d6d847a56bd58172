"""Random forest: bagged CART trees with per-split random feature subsets,
no pruning, and per-category vote tallies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TooFewCategories
from ..features.extract import FeatureMatrix
from .tree import DecisionTree, TreeParams, train_tree

DEFAULT_N_TREES = 500


@dataclass(frozen=True, eq=False)
class VoteTally:
    """Per-category tree votes for one sample; counts sum to the tree count."""

    categories: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.shape[0] != len(self.categories):
            raise ValueError("one count per category required")
        if np.any(counts < 0):
            raise ValueError("vote counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def winner(self) -> str:
        return self.categories[int(np.argmax(self.counts))]

    def top_two(self) -> tuple[int, int, int]:
        """(winner index, winner votes, runner-up votes)."""
        order = np.lexsort((np.arange(len(self.counts)), -self.counts))
        first = int(order[0])
        second_votes = int(self.counts[order[1]]) if len(order) > 1 else 0
        return first, int(self.counts[first]), second_votes


@dataclass(eq=False)
class ForestModel:
    trees: list[DecisionTree]
    categories: tuple[str, ...]
    seed: int
    oob_indices: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def votes(self, z: np.ndarray) -> VoteTally:
        return forest_votes(self, z)

    def classify(self, z: np.ndarray) -> str:
        return forest_classify(self, z)


def train_forest(
    train: FeatureMatrix,
    n_trees: int = DEFAULT_N_TREES,
    seed: int | np.random.SeedSequence = 0,
    max_depth: int | None = None,
) -> ForestModel:
    """Bagging with bootstrap samples of size n and ceil(sqrt(F)) candidate
    features per split; deterministic for a fixed seed regardless of
    scheduling (per-tree generators are spawned up front)."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    cats = train.categories
    if len(cats) < 2:
        raise TooFewCategories("forest training needs at least two categories")
    n = train.n_samples
    k_features = int(np.ceil(np.sqrt(train.n_features)))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_trees)
    trees: list[DecisionTree] = []
    oob: list[np.ndarray] = []
    for child in children:
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        params = TreeParams(
            max_depth=max_depth,
            n_candidate_features=min(k_features, train.n_features),
            seed=rng,
        )
        trees.append(train_tree(train.subset_rows(boot), params, categories=cats))
        oob.append(np.setdiff1d(np.arange(n), boot))
    seed_tag = seed if isinstance(seed, int) else -1  # -1: derived seed sequence
    return ForestModel(trees=trees, categories=cats, seed=seed_tag, oob_indices=oob)


def forest_votes(model: ForestModel, z: np.ndarray) -> VoteTally:
    counts = np.zeros(len(model.categories), dtype=np.int64)
    for tree in model.trees:
        counts[tree.predict_index(z)] += 1
    return VoteTally(categories=model.categories, counts=counts)


def forest_classify(model: ForestModel, z: np.ndarray) -> str:
    """Most-voted category; ties break to the lowest category index."""
    tally = forest_votes(model, z)
    return tally.categories[tally.top_two()[0]]


def oob_accuracy(model: ForestModel, train: FeatureMatrix) -> float:
    """Out-of-bag accuracy: each row is judged by the trees that never saw it."""
    if not model.oob_indices:
        raise ValueError("model carries no out-of-bag bookkeeping")
    n = train.n_samples
    counts = np.zeros((n, len(model.categories)), dtype=np.int64)
    for tree, oob in zip(model.trees, model.oob_indices):
        for i in oob:
            counts[i, tree.predict_index(train.values[i])] += 1
    cat_index = {c: k for k, c in enumerate(model.categories)}
    truth = np.array([cat_index[lb] for lb in train.labels])
    voted = counts.sum(axis=1) > 0
    if not voted.any():
        return 0.0
    return float(np.mean(np.argmax(counts[voted], axis=1) == truth[voted]))

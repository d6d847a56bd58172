"""CART-style decision tree: Gini-gain splits on midpoint thresholds,
optional random feature subsetting (for forests), and reduced-error
post-pruning on a held-out pruning set."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyNode, TooFewCategories
from ..features.extract import FeatureMatrix


def gini_impurity(counts) -> float:
    """1 - sum((n_c / n)^2) over category counts."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total < 1:
        raise EmptyNode("Gini impurity needs at least one sample")
    frac = counts / total
    return float(1.0 - (frac * frac).sum())


@dataclass
class TreeNode:
    counts: np.ndarray                  # training label histogram at this node
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.counts))  # majority; ties -> lowest index


@dataclass
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    n_candidate_features: int | None = None  # None = consider all features
    seed: int | np.random.SeedSequence | None = None


@dataclass(eq=False)
class DecisionTree:
    root: TreeNode
    categories: tuple[str, ...]

    def classify(self, z: np.ndarray) -> str:
        return self.categories[self.predict_index(z)]

    def predict_index(self, z: np.ndarray) -> int:
        node = self.root
        while not node.is_leaf:
            node = node.left if z[node.feature] <= node.threshold else node.right
        return node.prediction

    def n_nodes(self) -> int:
        def count(node):
            if node.is_leaf:
                return 1
            return 1 + count(node.left) + count(node.right)

        return count(self.root)


def _label_counts(y: np.ndarray, n_cats: int) -> np.ndarray:
    return np.bincount(y, minlength=n_cats)


def _best_split(X: np.ndarray, y: np.ndarray, n_cats: int, features: np.ndarray):
    """Best (gain, feature, threshold) over candidate features; thresholds are
    midpoints of adjacent distinct sorted values. Ties prefer the lower
    feature index, then the lower threshold."""
    n = len(y)
    parent_counts = _label_counts(y, n_cats)
    parent_gini = gini_impurity(parent_counts)
    best = (0.0, -1, 0.0)
    onehot = np.zeros((n, n_cats))
    for f in features:
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        changes = np.nonzero(np.diff(xs) > 0)[0]
        if changes.size == 0:
            continue
        onehot[:] = 0.0
        onehot[np.arange(n), y[order]] = 1.0
        left_counts = np.cumsum(onehot, axis=0)[changes]
        n_left = changes + 1.0
        n_right = n - n_left
        right_counts = parent_counts[None, :] - left_counts
        gini_left = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((right_counts / n_right[:, None]) ** 2).sum(axis=1)
        gains = parent_gini - (n_left * gini_left + n_right * gini_right) / n
        k = int(np.argmax(gains))
        gain = float(gains[k])
        if gain > best[0] + 1e-15:
            thr = 0.5 * (xs[changes[k]] + xs[changes[k] + 1])
            best = (gain, int(f), float(thr))
    return best


def train_tree(
    train: FeatureMatrix,
    params: TreeParams | None = None,
    categories: tuple[str, ...] | None = None,
) -> DecisionTree:
    """Greedy CART growth; stops at pure nodes, the depth limit, the minimum
    split size, or when no split yields positive Gini gain (this covers
    degenerate data with identical rows and mixed labels). Pure
    single-category input collapses to a single leaf.

    `categories` pins the label universe (used by forests whose bootstrap
    samples may miss a category); defaults to the labels present.
    """
    params = params or TreeParams()
    cats = categories if categories is not None else train.categories
    cat_index = {c: i for i, c in enumerate(cats)}
    if any(lb not in cat_index for lb in train.labels):
        raise TooFewCategories("training labels outside the declared category set")
    X = train.values
    y = np.array([cat_index[lb] for lb in train.labels])
    n_cats = len(cats)
    n_features = X.shape[1]
    rng = np.random.default_rng(params.seed)
    subset = params.n_candidate_features

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        counts = _label_counts(y[idx], n_cats)
        node = TreeNode(counts=counts)
        if (
            np.count_nonzero(counts) <= 1
            or len(idx) < params.min_samples_split
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            return node
        if subset is not None and subset < n_features:
            features = np.sort(rng.choice(n_features, size=subset, replace=False))
        else:
            features = np.arange(n_features)
        gain, f, thr = _best_split(X[idx], y[idx], n_cats, features)
        if f < 0:
            return node
        go_left = X[idx, f] <= thr
        node.feature = f
        node.threshold = thr
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node

    return DecisionTree(root=grow(np.arange(len(y)), 0), categories=cats)


def prune_tree(tree: DecisionTree, pruning_set: FeatureMatrix) -> DecisionTree:
    """Reduced-error pruning: bottom-up, collapse a subtree into its majority
    leaf whenever pruning-set accuracy does not decrease; repeated to a fix
    point. The input tree is not modified."""
    if pruning_set.n_samples < 1:
        raise EmptyNode("pruning needs a non-empty pruning set")
    pruned = DecisionTree(root=copy.deepcopy(tree.root), categories=tree.categories)
    cat_index = {c: i for i, c in enumerate(tree.categories)}
    X = pruning_set.values
    y = np.array([cat_index.get(lb, -1) for lb in pruning_set.labels])

    def accuracy() -> float:
        return float(np.mean([pruned.predict_index(row) == t for row, t in zip(X, y)]))

    def collapse_pass(node: TreeNode) -> bool:
        if node.is_leaf:
            return False
        changed = collapse_pass(node.left) | collapse_pass(node.right)
        if node.left.is_leaf and node.right.is_leaf:
            before = accuracy()
            feature, threshold = node.feature, node.threshold
            left, right = node.left, node.right
            node.feature = node.threshold = None
            node.left = node.right = None
            if accuracy() >= before:
                return True
            node.feature, node.threshold = feature, threshold
            node.left, node.right = left, right
        return changed

    while collapse_pass(pruned.root):
        pass
    return pruned


def train_pruned_tree(
    train: FeatureMatrix, seed: int | np.random.SeedSequence | None = None,
    grow_fraction: float = 2.0 / 3.0, params: TreeParams | None = None,
) -> DecisionTree:
    """Standalone DT: stratified 2/3 growing, 1/3 pruning split, grow with
    Gini, then reduced-error post-prune."""
    rng = np.random.default_rng(seed)
    labels = np.array(train.labels)
    grow_idx, prune_idx = [], []
    for cat in train.categories:
        rows = np.nonzero(labels == cat)[0]
        rows = rows[rng.permutation(len(rows))]
        n_grow = max(1, int(round(grow_fraction * len(rows))))
        if n_grow >= len(rows) and len(rows) > 1:
            n_grow = len(rows) - 1
        grow_idx.extend(rows[:n_grow])
        prune_idx.extend(rows[n_grow:])
    grow_m = train.subset_rows(np.array(sorted(grow_idx)))
    tree = train_tree(grow_m, params)
    if not prune_idx:
        return tree
    prune_m = train.subset_rows(np.array(sorted(prune_idx)))
    return prune_tree(tree, prune_m)

import numpy as np
import pytest

from focalpipe.classifiers.evaluate import evaluate
from focalpipe.classifiers.forest import (
    DEFAULT_N_TREES,
    VoteTally,
    forest_classify,
    forest_votes,
    oob_accuracy,
    train_forest,
)
from focalpipe.classifiers.serialize import load_model, save_model
from focalpipe.errors import EmptyMatrix
from focalpipe.features.extract import FeatureMatrix


def matrix_from(values, labels):
    values = np.asarray(values, dtype=float)
    return FeatureMatrix(
        values=values,
        labels=tuple(labels),
        ids=tuple(f"s{i}" for i in range(len(labels))),
        feature_names=tuple(f"f{i}" for i in range(values.shape[1])),
    )


@pytest.fixture(scope="module")
def separable():
    rng = np.random.default_rng(5)
    n = 100
    a = rng.normal(0, 0.6, size=(n, 3))
    b = rng.normal(4, 0.6, size=(n, 3))
    return matrix_from(np.vstack([a, b]), ["A"] * n + ["B"] * n)


def test_default_tree_count():
    assert DEFAULT_N_TREES == 500


def test_votes_sum_to_tree_count(separable):
    model = train_forest(separable, n_trees=30, seed=0)
    tally = forest_votes(model, separable.values[0])
    assert tally.total == 30
    assert all(c >= 0 for c in tally.counts)


def test_single_tree_forest():
    m = matrix_from([[0.0], [1.0]], ["A", "B"])
    model = train_forest(m, n_trees=1, seed=0)
    tally = forest_votes(model, np.array([0.0]))
    assert tally.total == 1
    assert tally.counts.max() == 1


def test_same_seed_identical_forest(separable):
    m1 = train_forest(separable, n_trees=20, seed=9)
    m2 = train_forest(separable, n_trees=20, seed=9)
    probe = np.random.default_rng(0).normal(2, 2, size=(50, 3))
    v1 = [forest_votes(m1, r).counts.tolist() for r in probe]
    v2 = [forest_votes(m2, r).counts.tolist() for r in probe]
    assert v1 == v2


def test_oob_accuracy_on_separable(separable):
    model = train_forest(separable, n_trees=60, seed=1)
    assert oob_accuracy(model, separable) >= 0.95


def test_training_sample_gets_supermajority(separable):
    model = train_forest(separable, n_trees=50, seed=2)
    tally = forest_votes(model, separable.values[0])
    idx = tally.categories.index("A")
    assert tally.counts[idx] >= 0.9 * 50


def test_classify_tie_breaks_low_index():
    tally = VoteTally(categories=("a", "b"), counts=np.array([250, 250]))
    assert tally.categories[tally.top_two()[0]] == "a"
    tally2 = VoteTally(categories=("a", "b"), counts=np.array([499, 1]))
    assert tally2.categories[tally2.top_two()[0]] == "a"


def test_forest_classify_matches_tally_majority(separable):
    model = train_forest(separable, n_trees=15, seed=3)
    for row in separable.values[:10]:
        tally = forest_votes(model, row)
        assert forest_classify(model, row) == tally.categories[int(np.argmax(tally.counts))]


def test_evaluate_accuracy_and_records(separable):
    model = train_forest(separable, n_trees=25, seed=4)
    acc, records = evaluate(model, separable)
    assert acc >= 0.99
    assert len(records) == separable.n_samples
    assert all(r.tally is not None and r.tally.total == 25 for r in records)
    with pytest.raises(EmptyMatrix):
        evaluate(model, separable.subset_rows(np.array([], dtype=int)))


def test_evaluate_all_wrong_is_zero():
    m = matrix_from([[0.0], [10.0]], ["A", "B"])
    model = train_forest(m, n_trees=5, seed=0)
    flipped = matrix_from([[0.0], [10.0]], ["B", "A"])
    acc, _ = evaluate(model, flipped)
    assert acc == 0.0


def test_forest_serialization_roundtrip(tmp_path, separable):
    model = train_forest(separable, n_trees=10, seed=6)
    path = tmp_path / "rf.json"
    save_model(model, path)
    loaded = load_model(path)
    probe = np.random.default_rng(1).normal(2, 2, size=(20, 3))
    assert [forest_classify(model, r) for r in probe] == [
        forest_classify(loaded, r) for r in probe
    ]
    assert [forest_votes(model, r).counts.tolist() for r in probe] == [
        forest_votes(loaded, r).counts.tolist() for r in probe
    ]

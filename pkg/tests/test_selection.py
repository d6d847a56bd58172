import numpy as np
import pytest

from focalpipe.errors import CountOutOfRange, DimensionMismatch, TooFewCategories
from focalpipe.features.extract import FeatureMatrix
from focalpipe.selection import (
    FISHER_CAP,
    FisherScores,
    NormParams,
    SelectionConfig,
    apply_normalization,
    fisher_scores,
    fit_normalization,
    load_selection,
    save_selection,
    select_top,
)


def matrix_from(values, labels):
    values = np.asarray(values, dtype=float)
    return FeatureMatrix(
        values=values,
        labels=tuple(labels),
        ids=tuple(f"s{i}" for i in range(len(labels))),
        feature_names=tuple(f"f{i}" for i in range(values.shape[1])),
    )


def brute_force_fisher(values, labels):
    """Independent re-derivation: between-class over within-class variance
    with the N/(N-1) correction, N = number of categories."""
    cats = sorted(set(labels))
    n_cats = len(cats)
    out = np.zeros(values.shape[1])
    for f in range(values.shape[1]):
        overall = values[:, f].mean()
        num = 0.0
        den = 0.0
        for c in cats:
            rows = values[[i for i, lb in enumerate(labels) if lb == c], f]
            num += (overall - rows.mean()) ** 2
            den += rows.var()
        if den < 1e-12:
            out[f] = 0.0 if num < 1e-12 else FISHER_CAP
        else:
            out[f] = num / den * n_cats / (n_cats - 1)
    return out


def test_fit_normalization_single_row():
    m = matrix_from([[3.0, 7.0]], ["a"])
    p = fit_normalization(m)
    assert np.array_equal(p.mins, [3.0, 7.0])
    assert np.array_equal(p.maxs, [3.0, 7.0])


def test_apply_normalization_bounds_and_constants():
    train = matrix_from([[2.0, 5.0], [4.0, 5.0]], ["a", "b"])
    p = fit_normalization(train)
    out = apply_normalization(train, p)
    assert out.values[0, 0] == 0.0 and out.values[1, 0] == 100.0
    assert np.all(out.values[:, 1] == 0.0)  # constant feature -> 0
    test = matrix_from([[1.0, 5.0], [9.0, 5.0]], ["a", "b"])
    clamped = apply_normalization(test, p)
    assert clamped.values[0, 0] == 0.0 and clamped.values[1, 0] == 100.0


def test_apply_normalization_dimension_mismatch():
    p = NormParams(mins=np.zeros(3), maxs=np.ones(3))
    with pytest.raises(DimensionMismatch):
        apply_normalization(matrix_from([[1.0, 2.0]], ["a"]), p)


def test_fisher_worked_example():
    m = matrix_from([[0.0], [20.0], [60.0], [80.0]], ["A", "A", "B", "B"])
    scores = fisher_scores(m)
    assert scores.scores[0] == pytest.approx(18.0)


def test_fisher_constant_feature_zero_and_cap():
    m = matrix_from(
        [[10.0, 1.0], [10.0, 1.0], [90.0, 1.0], [90.0, 1.0]],
        ["A", "A", "B", "B"],
    )
    scores = fisher_scores(m)
    assert scores.scores[0] == FISHER_CAP and scores.capped[0]
    assert scores.scores[1] == 0.0 and not scores.capped[1]


def test_fisher_needs_two_categories():
    with pytest.raises(TooFewCategories):
        fisher_scores(matrix_from([[1.0], [2.0]], ["A", "A"]))


def test_fisher_matches_brute_force(rng):
    for _ in range(30):
        n = int(rng.integers(4, 12))
        f = int(rng.integers(1, 6))
        labels = [rng.choice(["A", "B", "C"]) for _ in range(n)]
        while len(set(labels)) < 2:
            labels = [rng.choice(["A", "B", "C"]) for _ in range(n)]
        values = rng.uniform(0, 100, size=(n, f))
        got = fisher_scores(matrix_from(values, labels)).scores
        want = brute_force_fisher(values, labels)
        assert np.allclose(got, want, rtol=1e-9)


def test_select_top_order_and_ties():
    scores = FisherScores(scores=np.array([5.0, 1.0, 9.0]), capped=np.zeros(3, bool))
    idx = select_top(scores, SelectionConfig(count=2))
    assert list(idx) == [2, 0]
    tied = FisherScores(scores=np.array([3.0, 3.0, 1.0]), capped=np.zeros(3, bool))
    assert list(select_top(tied, SelectionConfig(count=2))) == [0, 1]


def test_select_top_fraction_one_returns_all_sorted():
    scores = FisherScores(scores=np.array([2.0, 7.0, 5.0]), capped=np.zeros(3, bool))
    idx = select_top(scores, SelectionConfig(fraction=1.0))
    assert list(idx) == [1, 2, 0]


def test_select_monotone_rescaling_invariance(rng):
    raw = rng.uniform(0, 10, size=20)
    a = FisherScores(scores=raw, capped=np.zeros(20, bool))
    b = FisherScores(scores=np.exp(raw), capped=np.zeros(20, bool))  # monotone map
    cfg = SelectionConfig(count=7)
    assert np.array_equal(select_top(a, cfg), select_top(b, cfg))


def test_selection_nesting_property(rng):
    scores = FisherScores(scores=rng.uniform(0, 1, 50), capped=np.zeros(50, bool))
    small = set(select_top(scores, SelectionConfig(fraction=0.1)))
    large = set(select_top(scores, SelectionConfig(fraction=0.4)))
    assert small <= large


def test_count_out_of_range():
    scores = FisherScores(scores=np.ones(4), capped=np.zeros(4, bool))
    with pytest.raises(CountOutOfRange):
        select_top(scores, SelectionConfig(count=9))
    with pytest.raises(CountOutOfRange):
        SelectionConfig(fraction=0.0).resolve(10)


def test_selection_json_roundtrip(tmp_path):
    names = [f"f{i}" for i in range(5)]
    scores = FisherScores(scores=np.array([1.0, 5.0, 3.0, 0.0, 2.0]), capped=np.zeros(5, bool))
    norm = NormParams(mins=np.zeros(5), maxs=np.arange(1.0, 6.0))
    idx = select_top(scores, SelectionConfig(count=3))
    path = tmp_path / "sel.json"
    save_selection(path, names, idx, scores, norm)
    got_idx, got_norm, got_names = load_selection(path)
    assert np.array_equal(got_idx, idx)
    assert np.array_equal(got_norm.mins, norm.mins)
    assert np.array_equal(got_norm.maxs, norm.maxs)
    assert got_names == names

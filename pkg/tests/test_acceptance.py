"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines. Shared synthetic corpora are built once per module.
"""
import json
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import iou
from focalpipe.classifiers.neural import nn_loss_and_gradient, train_nn
from focalpipe.classifiers.wnd import DISTANCE_FLOOR, build_wnd_model, wnd5_classify
from focalpipe.cli import dispatch
from focalpipe.features.extract import FeatureMatrix, extract_batch
from focalpipe.focus import FocusMeasureKind, select_optimal_plane
from focalpipe.harness.experiment import (
    ExperimentConfig,
    run_authentication_experiment,
    run_classification_experiment,
)
from focalpipe.harness.synthetic import (
    SynthConfig,
    make_grain_corpus,
    segmentation_suite_config,
    synth_stack,
)
from focalpipe.segmentation import CoarseParams, SnakeParams, coarse_mask, extract_components
from focalpipe.segmentation.pipeline import segment_grains
from focalpipe.selection import FISHER_CAP, fisher_scores
from focalpipe.authentication import TpVoteProfile, theta11, theta12, theta21, theta22
from focalpipe.classifiers.forest import VoteTally


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def corpus5():
    cfg = SynthConfig(n_types=5, grains_per_type=40, seed=11)
    records, labels = make_grain_corpus(cfg)
    return cfg, extract_batch(records, labels)


def _subset(matrix: FeatureMatrix, cats) -> FeatureMatrix:
    keep = np.nonzero([lb in cats for lb in matrix.labels])[0]
    return matrix.subset_rows(keep)


# ----------------------------------------------------------- criterion 1


def test_criterion_1_focus_recovery():
    cfg = SynthConfig(n_types=5, planes=31, sharp_plane=15, field_size=(128, 128),
                      grains_per_field=2, noise_sigma=0.01, seed=21)
    started = time.perf_counter()
    ag_hits = vf_hits = 0
    for i in range(100):
        stack, _, _ = synth_stack(cfg, i % 5, i)
        ag_hits += select_optimal_plane(stack, FocusMeasureKind.ABSOLUTE_GRADIENT).best_index == 15
        vf_hits += select_optimal_plane(stack, FocusMeasureKind.VOLLATH_F4).best_index == 15
    elapsed = time.perf_counter() - started
    ok = ag_hits == 100 and vf_hits >= 98 and elapsed < 30.0
    report("1 (focus)", ok,
           f"absolute gradient {ag_hits}/100, Vollath F4 {vf_hits}/100, {elapsed:.1f}s")


# ----------------------------------------------------------- criterion 2


def test_criterion_2_segmentation_quality():
    cfg = replace(segmentation_suite_config(seed=0), planes=1, sharp_plane=0)
    cp, sp = CoarseParams(), SnakeParams()
    started = time.perf_counter()
    fine_ious, improved, total = [], 0, 0
    for fi in range(50):
        stack, truth_masks, _ = synth_stack(cfg, fi % 5, fi)
        img = stack.planes[0]
        pre, cleaned = coarse_mask(img, cp)
        comps = extract_components(cleaned, cp)
        records = segment_grains(img, cp, sp, source_id=f"f{fi}")
        shape = img.pixels.shape
        comp_full = []
        for box, cmask in comps:
            full = np.zeros(shape, bool)
            full[box.y : box.y + box.h, box.x : box.x + box.w] = cmask.pixels
            comp_full.append(full)
        rec_full = []
        for r in records:
            full = np.zeros(shape, bool)
            full[r.box.y : r.box.y + r.box.h, r.box.x : r.box.x + r.box.w] = r.mask.pixels
            rec_full.append(full)
        for m in truth_masks:
            total += 1
            c_best = max((iou(m.pixels, c) for c in comp_full), default=0.0)
            f_best = max((iou(m.pixels, r) for r in rec_full), default=0.0)
            fine_ious.append(f_best)
            improved += f_best > c_best
    elapsed = time.perf_counter() - started
    fine = np.array(fine_ious)
    frac_good = float(np.mean(fine >= 0.9))
    frac_improved = improved / total
    ok = frac_good >= 0.95 and frac_improved >= 0.80 and elapsed < 300.0
    report("2 (segmentation)", ok,
           f"IoU>=0.9 for {frac_good:.1%} of {total} grains, snake improves {frac_improved:.1%}, "
           f"{elapsed:.0f}s")


# ----------------------------------------------------------- criterion 3


def test_criterion_3_feature_fuzz_determinism():
    cfg = SynthConfig(n_types=5, grains_per_type=200, crop_size=64, noise_sigma=0.03, seed=99)
    records, labels = make_grain_corpus(cfg)
    assert len(records) == 1000
    m1 = extract_batch(records, labels, threads=1)
    m2 = extract_batch(records, labels, threads=4)
    finite = bool(np.isfinite(m1.values).all())
    identical = bool(np.array_equal(m1.values, m2.values))
    ok = finite and identical
    report("3 (features)", ok,
           f"1000-grain fuzz finite={finite}, runs/threads identical={identical} "
           "(per-family unit examples: test_feature_families.py)")


# ----------------------------------------------------------- criterion 4


def brute_force_fisher(values, labels):
    cats = sorted(set(labels))
    n_cats = len(cats)
    out = np.zeros(values.shape[1])
    capped = np.zeros(values.shape[1], dtype=bool)
    for f in range(values.shape[1]):
        overall = values[:, f].mean()
        num = den = 0.0
        for c in cats:
            rows = values[[i for i, lb in enumerate(labels) if lb == c], f]
            num += (overall - rows.mean()) ** 2
            den += rows.var()
        if den < 1e-12:
            out[f] = 0.0 if num < 1e-12 else FISHER_CAP
            capped[f] = num >= 1e-12
        else:
            out[f] = num / den * n_cats / (n_cats - 1)
    return out, capped


def test_criterion_4_fisher_oracle(rng):
    mismatches = 0
    for trial in range(100):
        n = int(rng.integers(4, 16))
        f = int(rng.integers(1, 8))
        labels = [str(rng.choice(["A", "B", "C"])) for _ in range(n)]
        while len(set(labels)) < 2:
            labels = [str(rng.choice(["A", "B", "C"])) for _ in range(n)]
        values = rng.uniform(0, 100, size=(n, f))
        if trial % 5 == 0:
            values[:, 0] = [10.0 if lb == "A" else 90.0 for lb in labels]  # capped case
        if trial % 7 == 0:
            values[:, -1] = 42.0  # constant case
        matrix = FeatureMatrix(values=values, labels=tuple(labels),
                               ids=tuple(map(str, range(n))),
                               feature_names=tuple(f"f{i}" for i in range(f)))
        got = fisher_scores(matrix)
        want, want_capped = brute_force_fisher(values, labels)
        regular = ~want_capped
        if not np.allclose(got.scores[regular], want[regular], rtol=1e-9):
            mismatches += 1
        if not np.array_equal(got.capped, want_capped):
            mismatches += 1
        if np.any(got.scores[want_capped] != FISHER_CAP):
            mismatches += 1
    ok = mismatches == 0
    report("4 (Fisher oracle)", ok, f"100 random matrices, {mismatches} mismatches")


# ----------------------------------------------------------- criterion 5


def test_criterion_5_wnd_oracle(rng):
    agree = 0
    for _ in range(100):
        rows_per = int(rng.integers(2, 6))
        f = int(rng.integers(2, 6))
        values = rng.uniform(0, 100, size=(rows_per * 3, f))
        labels = ["a"] * rows_per + ["b"] * rows_per + ["c"] * rows_per
        weights = rng.uniform(0, 2, size=f)
        matrix = FeatureMatrix(values=values, labels=tuple(labels),
                               ids=tuple(map(str, range(len(labels)))),
                               feature_names=tuple(f"f{i}" for i in range(f)))
        model = build_wnd_model(matrix, weights)
        z = rng.uniform(0, 100, size=f)
        # exhaustive direct evaluation of the powered-distance mean
        scores = {}
        for cat in ("a", "b", "c"):
            rows = values[[i for i, lb in enumerate(labels) if lb == cat]]
            powered = [
                max(float(((z - t) ** 2 * weights).sum()), DISTANCE_FLOOR) ** -5 for t in rows
            ]
            scores[cat] = float(np.mean(powered))
        oracle = max(sorted(scores), key=lambda c: scores[c])
        agree += wnd5_classify(z, model) == oracle
    ok = agree == 100
    report("5 (WND-5 oracle)", ok, f"{agree}/100 decisions agree with direct evaluation")


# ----------------------------------------------------------- criterion 6


def test_criterion_6_classifier_gates(corpus5):
    _, matrix = corpus5
    cfg = ExperimentConfig(p_range=(5,), repeats=10, seed=3,
                           classifiers=("wnd5", "dt", "rf", "nn"),
                           feature_fractions=(0.02,), n_trees=500)
    started = time.perf_counter()
    result = run_classification_experiment(matrix, cfg)
    elapsed = time.perf_counter() - started
    means = {a["classifier"]: a["mean_accuracy"] for a in result.aggregates()}
    gates = {"rf": 0.90, "dt": 0.80, "wnd5": 0.80, "nn": 0.75}
    gates_ok = all(means[c] >= g for c, g in gates.items())
    rf_best = all(means["rf"] >= means[c] for c in ("dt", "wnd5", "nn"))
    ok = gates_ok and rf_best and elapsed < 600.0
    report("6 (classifiers)", ok,
           ", ".join(f"{c}={means[c]:.3f}" for c in ("rf", "dt", "wnd5", "nn"))
           + f", RF best={rf_best}, {elapsed:.0f}s")


# ----------------------------------------------------------- criterion 7


def test_criterion_7_accuracy_trend(corpus5):
    _, matrix = corpus5
    cfg = ExperimentConfig(p_range=(2, 3, 4, 5), repeats=10, seed=6,
                           classifiers=("rf",), n_trees=500)
    result = run_classification_experiment(matrix, cfg)
    aggs = sorted(result.aggregates(), key=lambda a: a["p"])
    means = [a["mean_accuracy"] for a in aggs]
    sds = [a["sd_accuracy"] for a in aggs]
    pooled = float(np.sqrt(np.mean(np.square(sds))))
    ok = all(means[i + 1] <= means[i] + pooled for i in range(len(means) - 1))
    report("7 (trend)", ok, f"RF mean accuracy vs p: {[round(m, 3) for m in means]}, "
           f"pooled SD {pooled:.3f}")


# ----------------------------------------------------------- criterion 8


def test_criterion_8_authentication(corpus5, rng):
    cfg5, matrix = corpus5
    cfg7 = SynthConfig(n_types=7, grains_per_type=40, seed=11)
    train_m = _subset(matrix, ("type_0", "type_1", "type_2"))
    in_records, in_labels = make_grain_corpus(cfg5, type_ids=(0, 1, 2), seed_offset=1000)
    inliers = extract_batch(in_records, in_labels)
    far_records, far_labels = make_grain_corpus(cfg7, type_ids=(5, 6), seed_offset=2000)
    near = _subset(matrix, ("type_3", "type_4"))
    far = extract_batch(far_records, far_labels)
    outliers = FeatureMatrix(
        values=np.vstack([near.values, far.values]),
        labels=near.labels + far.labels,
        ids=near.ids + far.ids,
        feature_names=matrix.feature_names,
    )
    cfg = ExperimentConfig(p_range=(3,), repeats=10, seed=5, n_trees=500)
    result = run_authentication_experiment(train_m, inliers, outliers, cfg)
    means = {a["condition"]: (a["mean_alpha_in"], a["mean_alpha_out"]) for a in result.aggregates()}
    a_in21, a_out21 = means["theta21"]
    _, a_out11 = means["theta11"]

    implications_hold = True
    for _ in range(10_000):
        votes = rng.integers(0, 200, size=3)
        tally = VoteTally(categories=("x", "y", "z"), counts=votes)
        k = int(rng.integers(2, 8))
        winner = tally.categories[tally.top_two()[0]]
        profiles = TpVoteProfile(
            votes={winner: rng.integers(1, 200, size=k)},
            margins={winner: rng.integers(0, 150, size=k)},
        )
        if theta12(tally, profiles) and not theta11(tally, profiles):
            implications_hold = False
        if theta22(tally, profiles) and not theta21(tally, profiles):
            implications_hold = False

    ok = a_out21 >= 0.95 and a_in21 >= 0.60 and implications_hold and a_out21 >= a_out11
    report("8 (authentication)", ok,
           f"theta21 alpha_out={a_out21:.3f} alpha_in={a_in21:.3f}, theta11 alpha_out={a_out11:.3f}, "
           f"implications hold={implications_hold}")


# ----------------------------------------------------------- criterion 9


def test_criterion_9_nn_gradient(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(6, 16))
        f = int(rng.integers(2, 6))
        c = int(rng.integers(2, 4))
        X1 = np.hstack([rng.normal(0, 1, size=(n, f)), np.ones((n, 1))])
        onehot = np.zeros((n, c))
        onehot[np.arange(n), rng.integers(0, c, size=n)] = 1.0
        w = rng.normal(0, 0.5, size=(f + 1, c))
        _, analytic = nn_loss_and_gradient(w, X1, onehot)
        numeric = np.zeros_like(w)
        eps = 1e-6
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                wp, wm = w.copy(), w.copy()
                wp[i, j] += eps
                wm[i, j] -= eps
                lp, _ = nn_loss_and_gradient(wp, X1, onehot)
                lm, _ = nn_loss_and_gradient(wm, X1, onehot)
                numeric[i, j] = (lp - lm) / (2 * eps)
        rel = np.abs(analytic - numeric).max() / max(np.abs(numeric).max(), 1e-12)
        worst = max(worst, rel)
    ok = worst < 1e-4
    report("9 (NN gradient)", ok, f"worst relative error {worst:.2e} over 20 instances")


# ----------------------------------------------------------- criterion 10


def test_criterion_10_reproducibility(tmp_path):
    synth_cfg = tmp_path / "synth.json"
    synth_cfg.write_text(json.dumps({
        "n_types": 3, "planes": 7, "sharp_plane": 3, "field_size": [128, 128],
        "grains_per_field": 2, "noise_sigma": 0.015, "seed": 13,
    }))
    data = tmp_path / "data"
    assert dispatch(["synth", "--config", str(synth_cfg), "--out", str(data),
                     "--stacks-per-type", "3"]) == 0
    outs = []
    for threads, name in ((1, "run_a"), (3, "run_b")):
        out = tmp_path / name
        code = dispatch(["--threads", str(threads), "experiment",
                         "--data", str(data), "--out", str(out),
                         "--p", "2", "--repeats", "2", "--classifiers", "rf", "dt",
                         "--n-trees", "30", "--seed", "11"])
        assert code == 0
        outs.append(out)
    identical = all(
        (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        for name in ("report.csv", "summary.json", "accuracy_vs_p.csv", "accuracy_vs_nf.csv")
    )
    report("10 (reproducibility)", identical,
           "full pipeline reports byte-identical across runs and thread counts")

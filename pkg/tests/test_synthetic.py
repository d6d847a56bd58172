import numpy as np
import pytest

from focalpipe.harness.synthetic import (
    SynthConfig,
    TypeParams,
    default_type_params,
    make_grain_corpus,
    render_field,
    synth_grain_record,
    synth_stack,
)


def small_cfg(**kwargs):
    defaults = dict(n_types=2, field_size=(96, 96), grains_per_field=1, planes=5,
                    sharp_plane=2, noise_sigma=0.0, seed=8)
    defaults.update(kwargs)
    return SynthConfig(**defaults)


def test_sharp_plane_is_unblurred_render():
    cfg = small_cfg()
    stack, masks, label = synth_stack(cfg, 0, 0)
    # regenerate the clean field with the identical stream
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0, 0)))
    clean, _ = render_field(cfg, 0, rng)
    assert np.array_equal(stack.planes[cfg.sharp_plane].pixels, np.clip(clean, 0, 1))
    assert label == "type_0"


def test_same_seed_bit_identical():
    cfg = small_cfg(noise_sigma=0.02)
    s1, m1, _ = synth_stack(cfg, 1, 5)
    s2, m2, _ = synth_stack(cfg, 1, 5)
    for a, b in zip(s1.planes, s2.planes):
        assert np.array_equal(a.pixels, b.pixels)
    for a, b in zip(m1, m2):
        assert np.array_equal(a.pixels, b.pixels)


def test_different_seeds_differ():
    cfg = small_cfg(noise_sigma=0.02)
    s1, _, _ = synth_stack(cfg, 0, 0)
    s2, _, _ = synth_stack(cfg, 0, 1)
    assert not np.array_equal(s1.planes[0].pixels, s2.planes[0].pixels)


def test_blur_grows_away_from_sharp_plane():
    from focalpipe.focus import absolute_gradient_score

    cfg = small_cfg(planes=7, sharp_plane=3, blur_per_plane=1.0)
    stack, _, _ = synth_stack(cfg, 0, 2)
    scores = [absolute_gradient_score(p) for p in stack.planes]
    assert int(np.argmax(scores)) == 3
    assert scores[0] < scores[2] and scores[6] < scores[4]


def test_disjoint_radius_ranges_separable_areas():
    small_type = TypeParams(base_intensity=0.45, spot_density=0.0, stripe_frequency=0.0,
                            radius_range=(8, 10), elongation=1.0)
    large_type = TypeParams(base_intensity=0.45, spot_density=0.0, stripe_frequency=0.0,
                            radius_range=(20, 24), elongation=1.0)
    cfg = SynthConfig(n_types=2, field_size=(128, 128), grains_per_field=2,
                      type_params=(small_type, large_type), noise_sigma=0.0, seed=3)
    small_areas, large_areas = [], []
    for s in range(5):
        _, masks0, _ = synth_stack(cfg, 0, s)
        _, masks1, _ = synth_stack(cfg, 1, s)
        small_areas += [m.pixels.sum() for m in masks0]
        large_areas += [m.pixels.sum() for m in masks1]
    assert max(small_areas) < min(large_areas)


def test_grain_record_from_generator():
    cfg = SynthConfig(n_types=3, crop_size=72, seed=4)
    rec = synth_grain_record(cfg, 2, 0)
    assert rec.image.pixels.shape == (72, 72)
    assert rec.mask.pixels.any()
    assert rec.source_id.startswith("type_2/")
    again = synth_grain_record(cfg, 2, 0)
    assert np.array_equal(rec.image.pixels, again.image.pixels)


def test_corpus_shapes_and_labels():
    cfg = SynthConfig(n_types=3, grains_per_type=4, crop_size=72, seed=4)
    records, labels = make_grain_corpus(cfg)
    assert len(records) == 12 and len(labels) == 12
    assert sorted(set(labels)) == ["type_0", "type_1", "type_2"]
    fresh, _ = make_grain_corpus(cfg, seed_offset=500)
    assert not np.array_equal(records[0].image.pixels, fresh[0].image.pixels)


def test_default_type_params_any_count():
    params = default_type_params(12)
    assert len(params) == 12
    assert all(p.radius_range[0] < p.radius_range[1] for p in params)
    assert len({(p.base_intensity, p.spot_density, p.stripe_frequency) for p in params}) == 12


def test_debris_and_clusters_render():
    cfg = small_cfg(grains_per_field=3, field_size=(160, 160), debris_density=3e-4,
                    cluster_probability=1.0)
    stack, masks, _ = synth_stack(cfg, 0, 1)
    assert len(masks) >= 2  # clustering still places grains
    assert stack.planes[0].pixels.shape == (160, 160)

import numpy as np
import pytest

from magimage import (DigitalImage, MetricSpec, NotInvertibleError, PatchConfig,
                      approx_report, crop_boundary, image_magnitude,
                      independence_magnitude, patched_magnitude, rank1_magnitude)
from magimage.datasets import synthetic_textures


def test_patch_config_validation():
    with pytest.raises(ValueError):
        PatchConfig(3, 10, 1)
    with pytest.raises(ValueError):
        PatchConfig(10, 10, -1)
    with pytest.raises(ValueError):
        PatchConfig(10, 10, 5)


# ---------------- independence approximation ----------------

def test_independence_constant_interior():
    img = DigitalImage.from_array(np.full((7, 7), 0.4))
    w = independence_magnitude(img, MetricSpec()).weights
    assert w[3, 3] == pytest.approx(0.25)
    assert w[0, 3] == pytest.approx(0.375)       # edge: boundary atom on one side
    assert w[0, 0] == pytest.approx(0.5625)      # corner


def test_independence_saturated_right_step():
    # a single huge step to the right of the centre pixel, flat otherwise
    arr = np.zeros((5, 8))
    arr[:, 4:] = 50.0
    w = independence_magnitude(DigitalImage.from_array(arr), MetricSpec()).weights
    assert w[2, 3] == pytest.approx(0.375, abs=1e-9)   # (1/2)(1 + 1/2) * 1/2


def test_independence_vertical_edge_atoms():
    arr = np.zeros((64, 64))
    arr[:, 32:] = 1.0
    w = independence_magnitude(DigitalImage.from_array(arr), MetricSpec()).weights
    atom = 0.5 * (1 - np.exp(-1.0))
    # both flanking columns share the row-wise step atom evenly; the
    # column-wise factor stays at the flat 1/2
    assert w[10, 31] == pytest.approx(w[10, 32])
    assert w[10, 31] > w[10, 10]
    horizontal = 0.5 * (1 + atom + 0.0)
    assert w[10, 31] == pytest.approx(horizontal * 0.5)


def test_independence_requires_l1():
    img = DigitalImage.from_array(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        independence_magnitude(img, MetricSpec("l2"))


# ---------------- rank-1 approximation ----------------

def test_rank1_constant_image_plane_measure():
    img = DigitalImage.from_array(np.full((8, 9), 0.6))
    w = rank1_magnitude(img, MetricSpec()).weights
    assert w[4, 4] == pytest.approx(0.25)
    assert w[0, 4] == pytest.approx(0.375)
    assert w[0, 0] == pytest.approx(0.5625)
    # boundary rows/columns elevated, interior flat
    assert np.allclose(w[1:-1, 1:-1], 0.25)


def test_rank1_matches_independence_on_separable_images(rng):
    # two-channel construction: one channel varies only down rows, the other
    # only across columns; both approximations price it identically
    f = np.repeat(rng.uniform(0, 1, 4), 3)
    g = np.repeat(rng.uniform(0, 1, 3), 4)
    data = np.stack([np.tile(f[:, None], (1, 12)), np.tile(g[None, :], (12, 1))], axis=2)
    img = DigitalImage.from_array(data)
    w_rank1 = rank1_magnitude(img, MetricSpec()).weights
    w_indep = independence_magnitude(img, MetricSpec()).weights
    np.testing.assert_allclose(w_rank1, w_indep, atol=1e-8)


def test_rank1_matches_independence_constant_times_step(rng):
    g = np.repeat(rng.uniform(0, 1, 3), 4)
    img = DigitalImage.from_array(np.tile(g[None, :], (8, 1)))
    np.testing.assert_allclose(rank1_magnitude(img, MetricSpec()).weights,
                               independence_magnitude(img, MetricSpec()).weights,
                               atol=1e-8)


def test_rank1_worst_on_full_rank_images(rng):
    img = DigitalImage.from_array(rng.uniform(0, 1, (64, 64)))
    dense = crop_boundary(image_magnitude(img, MetricSpec()), 2)
    r1 = approx_report(dense, crop_boundary(rank1_magnitude(img, MetricSpec()), 2))
    ind = approx_report(dense, crop_boundary(independence_magnitude(img, MetricSpec()), 2))
    assert r1.corr < ind.corr


# ---------------- patched algorithm ----------------

def test_small_image_falls_through_to_dense(rng):
    img = DigitalImage.from_array(rng.uniform(0, 1, (8, 8, 3)))
    cfg = PatchConfig(25, 25, 2)
    np.testing.assert_array_equal(patched_magnitude(img, cfg).weights,
                                  image_magnitude(img, cfg.metric).weights)


def test_interior_locality_ladder(rng):
    img = DigitalImage.from_array(rng.uniform(0, 1, (60, 60)))
    dense = image_magnitude(img, MetricSpec()).weights
    errs = []
    for d, patch in ((2, 15), (4, 15), (8, 20)):
        pat = patched_magnitude(img, PatchConfig(patch, patch, d)).weights
        errs.append(np.abs((pat - dense)[8:-8, 8:-8]).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_patched_correlation_against_dense(rng):
    img = DigitalImage.from_array(synthetic_textures(1, size=(60, 60), seed=9)[0])
    dense = crop_boundary(image_magnitude(img, MetricSpec()), 2)
    pat = crop_boundary(patched_magnitude(img, PatchConfig(25, 25, 2)), 2)
    assert approx_report(dense, pat).corr > 0.95


def test_stitch_covers_ragged_tiles(rng):
    img = DigitalImage.from_array(rng.uniform(0, 1, (37, 29)))
    cfg = PatchConfig(16, 16, 2)
    out = patched_magnitude(img, cfg)
    assert out.weights.shape == (37, 29)
    assert np.all(np.isfinite(out.weights))
    assert out.magnitude == pytest.approx(out.weights.sum())


def test_patched_deterministic(rng):
    img = DigitalImage.from_array(rng.uniform(0, 1, (40, 40)))
    cfg = PatchConfig(16, 16, 2)
    a = patched_magnitude(img, cfg).weights
    b = patched_magnitude(img, cfg).weights
    np.testing.assert_array_equal(a, b)


def test_moderate_patches_beat_large_ones(rng):
    # tile solves cost (core + 2 overlap)^3 per core^2 pixels, so runtime
    # grows with the patch side once per-tile overhead is amortised
    import time
    img = DigitalImage.from_array(rng.uniform(0, 1, (100, 100)))

    def runtime(size):
        best = np.inf
        for _ in range(2):
            t0 = time.perf_counter()
            patched_magnitude(img, PatchConfig(size, size, 2))
            best = min(best, time.perf_counter() - t0)
        return best

    assert runtime(25) < runtime(50)


def test_zero_padding_mode_differs_at_border(rng):
    img = DigitalImage.from_array(np.full((30, 30), 0.9))
    cfg = PatchConfig(10, 10, 2)
    edge = patched_magnitude(img, cfg, pad_mode="edge").weights
    zero = patched_magnitude(img, cfg, pad_mode="constant").weights
    assert np.abs(edge[0] - zero[0]).max() > 0.01
    np.testing.assert_allclose(edge[10:20, 10:20], zero[10:20, 10:20], atol=1e-9)


def test_not_invertible_names_patch():
    # a patch whose pixels collapse needs a metric that erases coordinates:
    # embed everything to a constant via a degenerate embedding
    class Collapse:
        def encode_image(self, data, s):
            return np.zeros((data.shape[0] * data.shape[1], 3))

    img = DigitalImage.from_array(np.zeros((12, 12)))
    cfg = PatchConfig(6, 6, 1, MetricSpec(embedding=Collapse()))
    with pytest.raises(NotInvertibleError) as err:
        patched_magnitude(img, cfg)
    assert err.value.patch_index == (0, 0)


# ---------------- crop_boundary ----------------

def test_crop_identity():
    mm = image_magnitude(DigitalImage.from_array(np.zeros((6, 6))), MetricSpec())
    np.testing.assert_array_equal(crop_boundary(mm, 0).weights, mm.weights)


def test_crop_arithmetic():
    mm = image_magnitude(DigitalImage.from_array(np.zeros((10, 10))), MetricSpec())
    assert crop_boundary(mm, 2).weights.shape == (6, 6)


def test_crop_too_large():
    mm = image_magnitude(DigitalImage.from_array(np.zeros((10, 10))), MetricSpec())
    with pytest.raises(ValueError):
        crop_boundary(mm, 5)


def test_crop_constant_after_padding(rng):
    img = DigitalImage.from_array(np.full((14, 14), 0.5))
    padded = DigitalImage.from_array(np.pad(img.data, ((2, 2), (2, 2), (0, 0)),
                                            mode="edge"))
    mm = crop_boundary(image_magnitude(padded, MetricSpec()), 2)
    assert mm.weights.max() - mm.weights.min() < 1e-6

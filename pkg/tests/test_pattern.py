import math

import numpy as np
import pytest

from vppdepth.errors import ConfigurationError, PipelineError
from vppdepth.geometry import DisparityMap
from vppdepth.pattern import (
    PatternConfig,
    ScoreBuffer,
    adaptive_weights,
    build_patterned_pair,
    compute_left_padding,
    crop_output,
    project_random,
    project_rgb,
    splat_target,
)

from conftest import random_disparity_map


def one_point_map(h, w, x, y, d):
    disp = np.zeros((h, w))
    valid = np.zeros((h, w), dtype=bool)
    disp[y, x] = d
    valid[y, x] = True
    return DisparityMap(disp, valid)


def gray(h, w, value=0.5):
    return np.full((h, w, 3), value)


class TestLeftPadding:
    def test_single_point(self):
        d = one_point_map(8, 16, x=3, y=2, d=10.0)
        assert compute_left_padding(d) == 7

    def test_no_out_of_image_warp(self):
        d = one_point_map(8, 16, x=12, y=2, d=10.0)
        assert compute_left_padding(d) == 0

    def test_empty_map(self):
        d = DisparityMap(np.zeros((4, 4)), np.zeros((4, 4), dtype=bool))
        assert compute_left_padding(d) == 0

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_exhaustive_scan(self, seed):
        rng = np.random.default_rng(seed)
        d = random_disparity_map(rng, 20, 30, 80, d_range=(0.5, 40.0))
        worst = 0.0
        for y in range(20):
            for x in range(30):
                if d.valid[y, x]:
                    worst = max(worst, d.disp[y, x] - x)
        assert compute_left_padding(d) == max(0, math.ceil(worst))


class TestSplat:
    def test_fractional_two_taps(self):
        target = np.zeros((1, 16, 3))
        zbuf = np.zeros((1, 16))
        color = np.array([1.0, 0.5, 0.25])
        assert splat_target(target, 10 - 2.3, 0, color, 2.3, zbuf)
        np.testing.assert_allclose(target[0, 7], (1 - 0.7) * color, atol=1e-12)
        np.testing.assert_allclose(target[0, 8], 0.7 * color, atol=1e-12)

    def test_integer_single_tap(self):
        target = np.zeros((1, 16, 3))
        zbuf = np.zeros((1, 16))
        color = np.array([0.2, 0.4, 0.6])
        splat_target(target, 10 - 3.0, 0, color, 3.0, zbuf)
        assert np.array_equal(target[0, 7], color)
        assert np.array_equal(target[0, 8], 0.0 * color)

    def test_foreground_wins(self):
        target = np.zeros((1, 16, 3))
        zbuf = np.zeros((1, 16))
        near = np.array([1.0, 0.0, 0.0])
        far = np.array([0.0, 1.0, 0.0])
        splat_target(target, 7.0, 0, far, 5.0, zbuf)
        splat_target(target, 7.0, 0, near, 12.0, zbuf)
        assert np.array_equal(target[0, 7], near)
        # Reversed order gives the same winner.
        target2 = np.zeros((1, 16, 3))
        zbuf2 = np.zeros((1, 16))
        splat_target(target2, 7.0, 0, near, 12.0, zbuf2)
        splat_target(target2, 7.0, 0, far, 5.0, zbuf2)
        assert np.array_equal(target2[0, 7], near)

    def test_out_of_image_reports_drop(self):
        target = np.zeros((1, 8, 3))
        zbuf = np.zeros((1, 8))
        assert not splat_target(target, -2.0, 0, np.ones(3), 6.0, zbuf)
        assert target.sum() == 0.0

    @pytest.mark.parametrize("frac", [0.1, 0.25, 0.3, 0.5, 0.7, 0.9, 0.125])
    def test_weights_sum_to_one_exactly(self, frac):
        w0 = 1.0 - frac
        assert w0 + frac == 1.0


class TestAdaptiveWeights:
    def test_center_weight_is_one(self):
        w = adaptive_weights(gray(9, 9), 4, 4, PatternConfig(patch_size=5, adaptive=True))
        assert w.values[4 - w.y0, 4 - w.x0] == 1.0

    def test_pure_spatial_neighbor(self):
        w = adaptive_weights(gray(9, 9), 4, 4, PatternConfig(patch_size=5, adaptive=True))
        assert w.values[4 - w.y0, 5 - w.x0] == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_diagonal_with_intensity_difference(self):
        img = gray(9, 9, 0.5)
        img[5, 5] = 0.5 + 0.1  # luma difference exactly 0.1 on gray pixels
        w = adaptive_weights(img, 4, 4, PatternConfig(patch_size=5, adaptive=True))
        assert w.values[5 - w.y0, 5 - w.x0] == pytest.approx(math.exp(-1.005), abs=1e-12)

    def test_constant_image_patterns_full_patch(self):
        cfg = PatternConfig(patch_size=5, adaptive=True)
        w = adaptive_weights(gray(16, 16), 8, 8, cfg)
        assert w.values.shape == (5, 5)
        assert (w.values > cfg.t_adpt).all()

    def test_border_patch_clipped(self):
        w = adaptive_weights(gray(9, 9), 0, 0, PatternConfig(patch_size=5, adaptive=True))
        assert w.values.shape == (3, 3)
        assert w.x0 == 0 and w.y0 == 0


class TestScoreBuffer:
    def test_monotone_and_first_writer_ties(self):
        buf = ScoreBuffer(2, 2)
        buf.insert_many(np.array([0]), np.array([0]), np.array([0.5]), np.array([10]))
        assert buf.score[0, 0] == 0.5 and buf.owner[0, 0] == 10
        # Equal score later does not replace.
        buf.insert_many(np.array([0]), np.array([0]), np.array([0.5]), np.array([11]))
        assert buf.owner[0, 0] == 10
        # Strictly higher score does.
        buf.insert_many(np.array([0]), np.array([0]), np.array([0.7]), np.array([12]))
        assert buf.owner[0, 0] == 12

    def test_bulk_tie_break_by_owner_id(self):
        buf = ScoreBuffer(1, 1)
        buf.insert_many(np.zeros(3, int), np.zeros(3, int),
                        np.array([0.9, 0.9, 0.9]), np.array([7, 3, 5]))
        assert buf.owner[0, 0] == 3

    def test_winner_independent_of_traversal_order_for_distinct_scores(self):
        rng = np.random.default_rng(13)
        rows = rng.integers(0, 6, size=40)
        cols = rng.integers(0, 6, size=40)
        scores = rng.permutation(np.linspace(0.1, 0.9, 40))  # all distinct
        owners = np.arange(40)
        a = ScoreBuffer(6, 6)
        a.insert_many(rows, cols, scores, owners)
        order = rng.permutation(40)
        b = ScoreBuffer(6, 6)
        for i in order:  # one-by-one, shuffled
            b.insert_many(rows[i : i + 1], cols[i : i + 1], scores[i : i + 1], owners[i : i + 1])
        assert np.array_equal(a.owner, b.owner)
        assert np.array_equal(a.score, b.score)


class TestProjection:
    def test_rgb_single_point_integer_disparity(self):
        img = np.zeros((6, 12, 3))
        img[2, 8] = [0.3, 0.6, 0.9]
        d = one_point_map(6, 12, x=8, y=2, d=3.0)
        pair = project_rgb(img, d, PatternConfig(mode="rgb"))
        assert pair.pad_left == 0
        assert np.array_equal(pair.reference[2, 8], [0.3, 0.6, 0.9])
        assert np.array_equal(pair.target[2, 5], [0.3, 0.6, 0.9])
        assert np.count_nonzero(pair.reference.sum(axis=2)) == 1
        assert np.count_nonzero(pair.target.sum(axis=2)) == 1

    def test_no_points_gives_black_pair(self):
        d = DisparityMap(np.zeros((4, 8)), np.zeros((4, 8), dtype=bool))
        pair = project_rgb(gray(4, 8), d, PatternConfig(mode="rgb"))
        assert pair.reference.sum() == 0.0 and pair.target.sum() == 0.0

    def test_dense_integer_rgb_coherence(self):
        rng = np.random.default_rng(5)
        img = rng.random((10, 40, 3))
        disp = np.full((10, 40), 6.0)
        d = DisparityMap(disp, np.ones((10, 40), dtype=bool))
        pair, diag = build_patterned_pair(img, d, PatternConfig(mode="rgb", left_padding=True))
        pad = pair.pad_left
        for y in range(10):
            for x in range(40):
                if diag.ref_patterned[y, x]:
                    dd = int(diag.ref_disparity[y, x])
                    assert np.array_equal(pair.reference[y, x + pad],
                                          pair.target[y, x + pad - dd])

    def test_same_seed_bit_identical(self):
        rng = np.random.default_rng(6)
        img = rng.random((12, 20, 3))
        d = random_disparity_map(rng, 12, 20, 30, integer=True)
        cfg = PatternConfig(mode="random", patch_size=3, adaptive=True, left_padding=True, rng_seed=9)
        a = project_random(img, d, cfg)
        b = project_random(img, d, cfg)
        assert np.array_equal(a.reference, b.reference)
        assert np.array_equal(a.target, b.target)

    def test_different_seed_differs(self):
        rng = np.random.default_rng(7)
        img = rng.random((12, 20, 3))
        d = random_disparity_map(rng, 12, 20, 30)
        a = project_random(img, d, PatternConfig(rng_seed=1))
        b = project_random(img, d, PatternConfig(rng_seed=2))
        assert not np.array_equal(a.reference, b.reference)

    def test_rgb_patch_takes_per_pixel_content(self):
        rng = np.random.default_rng(9)
        img = rng.random((9, 9, 3))
        d = one_point_map(9, 9, x=4, y=4, d=2.0)
        pair = project_rgb(img, d, PatternConfig(mode="rgb", patch_size=3))
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                assert np.array_equal(pair.reference[4 + dy, 4 + dx], img[4 + dy, 4 + dx])

    def test_fixed_patch_area_on_uniform_image(self):
        img = gray(20, 20)
        d = one_point_map(20, 20, x=10, y=10, d=4.0)
        cfg = PatternConfig(mode="random", patch_size=5)
        pair = project_random(img, d, cfg)
        assert np.count_nonzero(pair.reference.any(axis=2)) == 25

    def test_fixed_patch_clipped_at_border(self):
        img = gray(20, 20)
        d = one_point_map(20, 20, x=0, y=0, d=0.5)
        pair = project_random(img, d, PatternConfig(mode="random", patch_size=5))
        assert np.count_nonzero(pair.reference.any(axis=2)) == 9  # 3x3 corner clip

    def test_background_exactly_black(self):
        rng = np.random.default_rng(8)
        img = rng.random((16, 24, 3))
        d = random_disparity_map(rng, 16, 24, 40)
        pair, diag = build_patterned_pair(img, d, PatternConfig(mode="random", patch_size=3))
        unpatterned = ~diag.ref_patterned
        assert (pair.reference[:, : pair.pad_left] == 0.0).all() or pair.pad_left == 0
        assert (pair.reference[np.nonzero(unpatterned)] == 0.0).all()

    def test_dimension_mismatch_rejected(self):
        d = DisparityMap(np.zeros((4, 4)), np.zeros((4, 4), dtype=bool))
        with pytest.raises(ConfigurationError):
            project_rgb(gray(4, 5), d, PatternConfig(mode="rgb"))

    def test_padding_eliminates_drops(self):
        # Adversarial: large disparities at small x.
        disp = np.zeros((4, 10))
        valid = np.zeros((4, 10), dtype=bool)
        disp[:, 1] = 8.5
        valid[:, 1] = True
        d = DisparityMap(disp, valid)
        img = gray(4, 10)
        _, diag_off = build_patterned_pair(img, d, PatternConfig(left_padding=False))
        _, diag_on = build_patterned_pair(img, d, PatternConfig(left_padding=True))
        assert diag_off.dropped_warps == 4
        assert diag_on.dropped_warps == 0

    def test_occluded_reference_pixel_adopts_foreground_pattern(self):
        # Two points on one row warping to the same target pixel: the
        # farther one is occluded there and must repeat the foreground
        # pattern for its own disparity to stay matchable.
        disp = np.zeros((1, 16))
        valid = np.zeros((1, 16), dtype=bool)
        disp[0, 10] = 4.0
        valid[0, 10] = True
        disp[0, 14] = 8.0
        valid[0, 14] = True
        d = DisparityMap(disp, valid)
        pair, diag = build_patterned_pair(gray(1, 16), d, PatternConfig(mode="random", rng_seed=4))
        fg = pair.target[0, 6]
        assert np.array_equal(pair.reference[0, 14], fg)  # winner at the tap
        assert np.array_equal(pair.reference[0, 10], fg)  # occluded: reprojected
        # Coherence holds at both source pixels.
        for x in (10, 14):
            dd = int(diag.ref_disparity[0, x])
            assert np.array_equal(pair.reference[0, x], pair.target[0, x - dd])


def coherence_scan(pair, diag):
    """Exhaustive integer-disparity coherence check; returns checked count."""
    pad = pair.pad_left
    checked = 0
    ys, xs = np.nonzero(diag.ref_patterned)
    for y, x in zip(ys, xs):
        dd = diag.ref_disparity[y, x]
        assert dd == int(dd)
        tx = x + pad - int(dd)
        if tx < 0:
            continue  # correspondence out of image (only without padding)
        assert np.array_equal(pair.reference[y, x + pad], pair.target[y, tx]), (y, x)
        checked += 1
    return checked


class TestCoherence:
    @pytest.mark.parametrize("mode", ["rgb", "random"])
    @pytest.mark.parametrize("patch", [1, 3, 5])
    @pytest.mark.parametrize("adaptive", [False, True])
    @pytest.mark.parametrize("padding", [False, True])
    def test_integer_coherence_small(self, mode, patch, adaptive, padding):
        rng = np.random.default_rng(hash((patch, adaptive, padding)) % 2**31)
        img = rng.random((18, 26, 3))
        d = random_disparity_map(rng, 18, 26, 50, d_range=(1.0, 20.0), integer=True)
        cfg = PatternConfig(mode=mode, patch_size=patch, adaptive=adaptive,
                            left_padding=padding, rng_seed=3)
        pair, diag = build_patterned_pair(img, d, cfg)
        assert coherence_scan(pair, diag) > 0


class TestAdaptiveBehavior:
    def test_translation_invariant_eligible_set_on_constant_image(self):
        img = gray(30, 30)
        cfg = PatternConfig(mode="random", patch_size=9, adaptive=True)
        shapes = []
        for (x, y) in [(10, 10), (15, 12), (18, 17)]:
            d = one_point_map(30, 30, x=x, y=y, d=2.0)
            pair = project_random(img, d, cfg)
            mask = pair.reference.any(axis=2)
            ys, xs = np.nonzero(mask)
            shapes.append(frozenset(zip(ys - y, xs - x)))
        assert shapes[0] == shapes[1] == shapes[2]

    def test_adaptive_trims_across_strong_edge(self):
        img = gray(20, 20, 0.1)
        img[:, 10:] = 0.9  # hard vertical edge
        cfg = PatternConfig(mode="random", patch_size=5, adaptive=True, sigma_i=0.1, rng_seed=1)
        d = one_point_map(20, 20, x=9, y=10, d=2.0)
        pair = project_random(img, d, cfg)
        mask = pair.reference.any(axis=2)
        assert mask[10, 9]
        assert not mask[10, 11]  # other side of the edge not patterned
        non_adaptive = project_random(img, d, PatternConfig(mode="random", patch_size=5, rng_seed=1))
        assert non_adaptive.reference.any(axis=2)[10, 11]


class TestConfigInvariants:
    def test_even_patch_rejected(self):
        with pytest.raises(ConfigurationError):
            PatternConfig(patch_size=4)

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigurationError):
            PatternConfig(mode="noise")

    def test_t_adpt_range(self):
        with pytest.raises(ConfigurationError):
            PatternConfig(t_adpt=0.0)
        with pytest.raises(ConfigurationError):
            PatternConfig(t_adpt=1.0)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ConfigurationError):
            PatternConfig(sigma_xy=0.0)


class TestCrop:
    def test_zero_pad_identity(self):
        d = DisparityMap(np.full((3, 5), 2.0), np.ones((3, 5), dtype=bool))
        out = crop_output(d, 0)
        assert np.array_equal(out.disp, d.disp)

    def test_columns_shifted(self):
        disp = np.arange(15.0).reshape(3, 5) + 1.0
        d = DisparityMap(disp, np.ones((3, 5), dtype=bool))
        out = crop_output(d, 2)
        assert out.width == 3
        assert np.array_equal(out.disp, disp[:, 2:])

    def test_width_mismatch_raises(self):
        d = DisparityMap(np.full((3, 5), 2.0), np.ones((3, 5), dtype=bool))
        with pytest.raises(PipelineError):
            crop_output(d, 2, expected_width=5)

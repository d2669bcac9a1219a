import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanegen.imaging import (
    ThresholdPair,
    canny,
    color_threshold,
    dilate,
    read_image,
    read_mask,
    write_image,
    write_mask,
)

from oracles import canny_reference, dilate_bruteforce


def rand_image(rng, h=16, w=16, lo=0, hi=256):
    return rng.integers(lo, hi, size=(h, w, 3), dtype=np.uint8)


class TestColorThreshold:
    def test_all_white_inside_bounds(self):
        img = np.full((4, 5, 3), 255, np.uint8)
        t = ThresholdPair((200, 200, 200), (255, 255, 255))
        assert (color_threshold(img, t) == 1).all()

    def test_full_range_accepts_everything(self):
        rng = np.random.default_rng(0)
        t = ThresholdPair((0, 0, 0), (255, 255, 255))
        assert (color_threshold(rand_image(rng), t) == 1).all()

    def test_per_pixel_bound_check(self):
        img = np.array(
            [[[255, 255, 255], [0, 0, 0]], [[250, 250, 250], [100, 100, 100]]],
            dtype=np.uint8,
        )
        t = ThresholdPair((240, 240, 240), (255, 255, 255))
        assert color_threshold(img, t).ravel().tolist() == [1, 0, 1, 0]

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            ThresholdPair((100, 100, 100), (50, 200, 200))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), widen=st.integers(1, 60))
    def test_monotone_in_thresholds(self, seed, widen):
        rng = np.random.default_rng(seed)
        img = rand_image(rng, 8, 8)
        narrow = ThresholdPair((90, 90, 90), (170, 170, 170))
        wide = ThresholdPair(
            tuple(90 - widen for _ in range(3)), tuple(170 + widen for _ in range(3))
        )
        a = color_threshold(img, narrow)
        b = color_threshold(img, wide)
        assert (b >= a).all()


class TestCanny:
    def test_constant_image_has_no_edges(self):
        img = np.full((9, 9, 3), 123, np.uint8)
        assert canny(img, ThresholdPair()).sum() == 0

    def test_vertical_step_edge_single_chain(self):
        img = np.zeros((20, 14, 3), np.uint8)
        img[:, 7:] = 255
        edges = canny(img, ThresholdPair())
        # exactly one pixel per row, same column, spanning the full height
        assert (edges.sum(axis=1) == 1).all()
        cols = edges.argmax(axis=1)
        assert (cols == cols[0]).all()

    def test_too_small_image_is_an_error(self):
        with pytest.raises(ValueError):
            canny(np.zeros((2, 5, 3), np.uint8), ThresholdPair())

    def test_matches_scalar_reference_pipeline(self):
        t = ThresholdPair((60, 60, 60), (140, 140, 140))
        for seed in range(4):
            rng = np.random.default_rng(seed)
            img = rand_image(rng, 18, 24)
            expected = canny_reference(img, t.canny_low, t.canny_high)
            assert np.array_equal(canny(img, t), expected)

    def test_invariant_under_channel_offset(self):
        rng = np.random.default_rng(7)
        img = rand_image(rng, 12, 12, lo=0, hi=200)
        t = ThresholdPair((60, 60, 60), (140, 140, 140))
        shifted = (img.astype(np.int16) + 40).astype(np.uint8)
        assert np.array_equal(canny(img, t), canny(shifted, t))

    def test_pure(self):
        rng = np.random.default_rng(3)
        img = rand_image(rng)
        t = ThresholdPair()
        assert np.array_equal(canny(img, t), canny(img, t))


class TestDilate:
    def test_single_pixel_radius_one_is_plus_footprint(self):
        mask = np.zeros((5, 5), np.uint8)
        mask[2, 2] = 1
        out = dilate(mask, 1)
        assert np.array_equal(out, dilate_bruteforce(mask, 1))
        assert out.sum() == 5  # center plus 4-neighborhood

    def test_radius_zero_is_identity(self):
        rng = np.random.default_rng(0)
        mask = (rng.random((9, 9)) < 0.3).astype(np.uint8)
        assert np.array_equal(dilate(mask, 0), mask)

    def test_all_ones_fixed_point(self):
        mask = np.ones((6, 7), np.uint8)
        assert (dilate(mask, 4) == 1).all()

    @pytest.mark.parametrize("radius", [1, 2, 3.5])
    def test_matches_bruteforce_distance_check(self, radius):
        rng = np.random.default_rng(int(radius * 10))
        mask = (rng.random((20, 16)) < 0.08).astype(np.uint8)
        assert np.array_equal(dilate(mask, radius), dilate_bruteforce(mask, radius))

    def test_monotone_and_extensive(self):
        rng = np.random.default_rng(5)
        mask = (rng.random((16, 16)) < 0.1).astype(np.uint8)
        grown = dilate(mask, 2)
        assert (grown >= mask).all()

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 1000), a=st.integers(0, 3), b=st.integers(0, 3))
    def test_iterated_dilation_bounds(self, seed, a, b):
        # Discrete disc dilation is bounded between the max-radius and the
        # sum-radius dilations (triangle inequality); exact semigroup equality
        # does not hold for discrete Euclidean discs.
        rng = np.random.default_rng(seed)
        mask = (rng.random((24, 24)) < 0.05).astype(np.uint8)
        twice = dilate(dilate(mask, a), b)
        assert (twice >= dilate(mask, max(a, b))).all()
        assert (twice <= dilate(mask, a + b)).all()


class TestPngIO:
    def test_image_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rand_image(rng)
        path = tmp_path / "img.png"
        write_image(path, img)
        assert np.array_equal(read_image(path), img)

    def test_mask_roundtrip_as_0_255(self, tmp_path):
        rng = np.random.default_rng(1)
        mask = (rng.random((10, 12)) < 0.5).astype(np.uint8)
        path = tmp_path / "mask.png"
        write_mask(path, mask)
        assert np.array_equal(read_mask(path), mask)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanegen.control import (
    LaneAnnotation,
    build_control_map,
    fuse,
    parse_annotation,
    rasterize_annotation,
    serialize_annotation,
)
from lanegen.imaging import ThresholdPair, color_threshold

from conftest import synthetic_road
from oracles import stroke_mask_bruteforce


class TestParse:
    def test_two_point_lane(self):
        ann = parse_annotation("10 590 20 580")
        assert len(ann) == 1
        assert ann.lanes[0].tolist() == [[10.0, 590.0], [20.0, 580.0]]

    def test_empty_file(self):
        assert len(parse_annotation("")) == 0
        assert len(parse_annotation("\n  \n")) == 0

    def test_odd_token_count_is_error(self):
        with pytest.raises(ValueError, match="odd"):
            parse_annotation("10 590 20")

    def test_non_numeric_token_is_error(self):
        with pytest.raises(ValueError, match="non-numeric"):
            parse_annotation("10 590 twenty 580")

    def test_single_point_lane_is_error(self):
        with pytest.raises(ValueError, match="2 points"):
            parse_annotation("10 590")

    @settings(max_examples=40, deadline=None)
    @given(
        lanes=st.lists(
            st.lists(
                st.tuples(
                    st.floats(-50, 1700, allow_nan=False),
                    st.floats(-50, 650, allow_nan=False),
                ),
                min_size=2,
                max_size=6,
            ),
            min_size=0,
            max_size=4,
        )
    )
    def test_serialize_parse_roundtrip(self, lanes):
        ann = LaneAnnotation([np.array(lane) for lane in lanes])
        again = parse_annotation(serialize_annotation(ann))
        assert len(again) == len(ann)
        for a, b in zip(ann.lanes, again.lanes):
            assert np.array_equal(a, b)


class TestRasterize:
    def test_horizontal_stroke1_is_bresenham_set(self):
        ann = LaneAnnotation([np.array([[2.0, 5.0], [9.0, 5.0]])])
        mask = rasterize_annotation(ann, 12, 10, stroke=1)
        expected = np.zeros((10, 12), np.uint8)
        expected[5, 2:10] = 1
        assert np.array_equal(mask, expected)

    def test_empty_annotation_is_blank(self):
        assert rasterize_annotation(LaneAnnotation([]), 8, 8, 2).sum() == 0

    def test_lane_outside_frame_clips_to_blank(self):
        ann = LaneAnnotation([np.array([[-30.0, -10.0], [-5.0, -20.0]])])
        assert rasterize_annotation(ann, 16, 16, 3).sum() == 0

    def test_zero_canvas_is_error(self):
        with pytest.raises(ValueError):
            rasterize_annotation(LaneAnnotation([]), 0, 10, 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_bruteforce_distance_oracle(self, seed):
        rng = np.random.default_rng(seed)
        lanes = [rng.uniform(-10, 40, size=(rng.integers(2, 5), 2)) for _ in range(3)]
        ann = LaneAnnotation(lanes)
        stroke = float(rng.integers(1, 7))
        mask = rasterize_annotation(ann, 32, 24, stroke)
        expected = stroke_mask_bruteforce(lanes, 32, 24, stroke)
        assert np.array_equal(mask.astype(bool), expected)


def rand_mask(rng, shape=(8, 8)):
    return (rng.random(shape) < 0.5).astype(np.uint8)


class TestFuse:
    def test_annotation_dominates_when_edges_empty(self):
        ones = np.ones((4, 4), np.uint8)
        zeros = np.zeros((4, 4), np.uint8)
        assert (fuse(ones, ones, zeros) == 1).all()

    def test_reduces_to_edges_without_annotation(self):
        rng = np.random.default_rng(0)
        zeros = np.zeros((6, 6), np.uint8)
        m, e = rand_mask(rng, (6, 6)), rand_mask(rng, (6, 6))
        assert np.array_equal(fuse(zeros, m, e), e)

    def test_truth_table_2x2(self):
        a = np.array([[1, 1], [0, 0]], np.uint8)
        m = np.array([[1, 0], [1, 0]], np.uint8)
        e = np.array([[0, 1], [0, 1]], np.uint8)
        assert fuse(a, m, e).ravel().tolist() == [1, 1, 0, 1]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimensions"):
            fuse(np.ones((2, 2), np.uint8), np.ones((2, 3), np.uint8),
                 np.ones((2, 2), np.uint8))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_or_equals_max_and_superset(self, seed):
        rng = np.random.default_rng(seed)
        a, m, e = (rand_mask(rng) for _ in range(3))
        fused = fuse(a, m, e)
        via_max = np.maximum(a & m, e)
        assert np.array_equal(fused, via_max)
        assert ((a & m) <= fused).all()

    def test_monotone_and_idempotent(self):
        rng = np.random.default_rng(42)
        a, m, e = (rand_mask(rng) for _ in range(3))
        base = fuse(a, m, e)
        assert (fuse(np.maximum(a, m), m, e) >= base).all()
        am = (a & m).astype(np.uint8)
        assert np.array_equal(fuse(a, m, am), am)


class TestBuildControlMap:
    def test_black_image_empty_annotation(self):
        img = np.zeros((16, 16, 3), np.uint8)
        cmap = build_control_map(img, LaneAnnotation([]))
        assert cmap.sum() == 0

    def test_white_image_reduces_to_lane(self):
        img = np.full((16, 16, 3), 250, np.uint8)
        ann = LaneAnnotation([np.array([[3.0, 2.0], [3.0, 13.0]])])
        t = ThresholdPair((200, 200, 200), (255, 255, 255))
        cmap = build_control_map(img, ann, t, stroke=2)
        assert np.array_equal(cmap, rasterize_annotation(ann, 16, 16, 2))

    def test_road_tile_contains_gated_annotation(self):
        img, ann = synthetic_road()
        t = ThresholdPair((200, 200, 200), (255, 255, 255))
        cmap = build_control_map(img, ann, t, stroke=3)
        gated = rasterize_annotation(ann, img.shape[1], img.shape[0], 3) & color_threshold(img, t)
        assert (cmap >= gated).all()

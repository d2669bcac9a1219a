import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanegen.control import LaneAnnotation
from lanegen.evaluation import (
    MF1_GRID,
    EvalConfig,
    EmbeddingStats,
    embedding_stats,
    evaluate_categories,
    f1_sweep,
    frechet_distance,
    image_embedding,
    iou_matrix,
    lane_iou,
    match_from_matrix,
    match_lanes,
    patch_embeddings,
    render_table,
)

from oracles import assignment_bruteforce, iou_bruteforce

SMALL = EvalConfig(canvas=(64, 48), lane_width=8.0)


def vlane(x, y0=2.0, y1=44.0):
    return np.array([[x, y0], [x, y1]])


def random_annotation(rng, max_lanes=5, width=64, height=48):
    n = rng.integers(0, max_lanes + 1)
    lanes = []
    for _ in range(n):
        pts = rng.integers(2, 5)
        lanes.append(
            np.column_stack(
                [rng.uniform(-8, width + 8, pts), rng.uniform(-8, height + 8, pts)]
            )
        )
    return LaneAnnotation(lanes)


class TestLaneIoU:
    def test_identical_lanes(self):
        assert lane_iou(vlane(20), vlane(20), SMALL) == 1.0

    def test_disjoint_lanes(self):
        assert lane_iou(vlane(5), vlane(50), SMALL) == 0.0

    def test_parallel_lanes_match_pixel_counting(self):
        cfg = EvalConfig(canvas=(64, 48), lane_width=30.0)
        a, b = vlane(20, 0, 47), vlane(35, 0, 47)
        expected = iou_bruteforce(a, b, 64, 48, 30.0)
        assert lane_iou(a, b, cfg) == expected

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0, 48, (3, 2))
        b = rng.uniform(0, 48, (3, 2))
        assert lane_iou(a, b, SMALL) == lane_iou(b, a, SMALL)

    def test_degenerate_lane_is_error(self):
        with pytest.raises(ValueError):
            lane_iou(np.array([[1.0, 1.0]]), vlane(5), SMALL)

    def test_scale_consistency(self):
        # integer upscaling moves IoU by less than the discretization bound
        a, b = vlane(20, 4, 44), vlane(26, 4, 44)
        small = lane_iou(a, b, EvalConfig(canvas=(64, 48), lane_width=10.0))
        big = lane_iou(3 * a, 3 * b, EvalConfig(canvas=(192, 144), lane_width=30.0))
        assert abs(small - big) < 2.0 / 48

    def test_culane_default_width_scales_with_canvas(self):
        assert EvalConfig().width_px == 30.0
        assert EvalConfig(canvas=(820, 295)).width_px == 15.0


class TestMatching:
    def test_identical_lists(self):
        ann = LaneAnnotation([vlane(10), vlane(30), vlane(50)])
        r = match_lanes(ann, ann, 0.5, SMALL)
        assert (r.tp, r.fp, r.fn) == (3, 0, 0)

    def test_empty_predictions(self):
        gts = LaneAnnotation([vlane(10), vlane(30), vlane(50)])
        r = match_lanes(LaneAnnotation([]), gts, 0.5, SMALL)
        assert (r.tp, r.fp, r.fn) == (0, 0, 3)

    def test_greedy_trap_resolved_optimally(self):
        # greedy-by-max would pair (0,1) and strand pred 1; optimal keeps both
        ious = np.array([[0.6, 0.9], [0.0, 0.8]])
        r = match_from_matrix(ious, 0.5)
        assert r.tp == 2
        assert [(i, j) for i, j, _ in r.pairs] == [(0, 0), (1, 1)]

    def test_threshold_filters_pairs(self):
        ious = np.array([[0.45]])
        assert match_from_matrix(ious, 0.5).tp == 0
        assert match_from_matrix(ious, 0.45).tp == 1

    def test_tie_breaks_to_lowest_indices(self):
        ious = np.array([[0.8, 0.8], [0.8, 0.8]])
        r = match_from_matrix(ious, 0.5)
        assert [(i, j) for i, j, _ in r.pairs] == [(0, 0), (1, 1)]

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_exhaustive_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n, m = rng.integers(1, 7), rng.integers(1, 7)
        ious = np.round(rng.random((n, m)), 3)
        alpha = float(rng.choice([0.3, 0.5, 0.7]))
        r = match_from_matrix(ious, alpha)
        best_k, best_total = assignment_bruteforce(ious, alpha)
        assert r.tp == best_k
        assert sum(iou for _, _, iou in r.pairs) == pytest.approx(best_total, abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_tp_bounds_and_alpha_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        ious = rng.random((rng.integers(0, 5), rng.integers(0, 5)))
        last_tp = None
        for alpha in (0.9, 0.7, 0.5, 0.3):
            r = match_from_matrix(ious, alpha)
            assert r.tp <= min(ious.shape)
            if last_tp is not None:
                assert r.tp >= last_tp  # lowering alpha never decreases tp
            last_tp = r.tp


class TestF1Sweep:
    def test_perfect_match_everywhere(self):
        ann = LaneAnnotation([vlane(12), vlane(40)])
        s = f1_sweep([(ann, ann)] * 3, SMALL)
        assert all(s.f1[a] == 1.0 for a in MF1_GRID)
        assert s.mf1 == 1.0

    def test_mf1_is_mean_of_constant_grid(self):
        # two preds per image, one perfect and one spurious: P = 0.5, R = 1
        # at every alpha, so F1 is the same constant across the grid
        gt = LaneAnnotation([vlane(12)])
        pred = LaneAnnotation([vlane(12), vlane(50)])
        s = f1_sweep([(pred, gt)], SMALL)
        expected = 2 * 0.5 * 1.0 / 1.5
        for a in MF1_GRID:
            assert s.f1[a] == pytest.approx(expected, abs=1e-12)
        assert s.mf1 == pytest.approx(expected, abs=1e-12)

    def test_f1_non_increasing_in_alpha(self):
        rng = np.random.default_rng(3)
        dataset = [
            (random_annotation(rng), random_annotation(rng)) for _ in range(6)
        ]
        s = f1_sweep(dataset, SMALL)
        values = [s.f1[a] for a in MF1_GRID]
        assert all(x >= y - 1e-12 for x, y in zip(values, values[1:]))

    def test_zero_over_zero_is_zero(self):
        empty = LaneAnnotation([])
        s = f1_sweep([(empty, empty)], SMALL)
        assert s.f1[0.5] == 0.0

    def test_mixed_fixture_matches_recount(self):
        rng = np.random.default_rng(11)
        dataset = [
            (random_annotation(rng, 3), random_annotation(rng, 3)) for _ in range(5)
        ]
        s = f1_sweep(dataset, SMALL)
        for a in (0.5, 0.75):
            tp = fp = fn = 0
            for preds, gts in dataset:
                r = match_from_matrix(iou_matrix(preds, gts, SMALL), a)
                tp, fp, fn = tp + r.tp, fp + r.fp, fn + r.fn
            assert s.counts[a] == (tp, fp, fn)


class TestReport:
    def test_table_layout(self):
        ann = LaneAnnotation([vlane(12)])
        datasets = {c: [(ann, ann)] for c in ("normal", "snow", "rain", "fog", "night", "dusk")}
        report = evaluate_categories(datasets, SMALL)
        table = render_table(report)
        lines = table.splitlines()
        assert lines[0].split() == [
            "Normal", "Snow", "Rain", "Fog", "Night", "Dusk", "F1@50", "F1@75", "mF1"
        ]
        assert lines[1].split() == ["100.00"] * 9

    def test_report_roundtrips_to_dict(self):
        ann = LaneAnnotation([vlane(12)])
        report = evaluate_categories({"snow": [(ann, ann)]}, SMALL)
        d = report.to_dict()
        assert d["per_category"]["snow"]["mf1"] == 1.0
        assert d["overall"]["f1"]["0.5"] == 1.0


class TestEmbeddingStats:
    def test_duplicate_vectors_zero_covariance(self):
        s = embedding_stats([np.array([1.0, 2.0])] * 2)
        assert (s.sigma == 0).all()

    def test_hand_computed_unbiased_covariance(self):
        s = embedding_stats([np.array([0.0, 0.0]), np.array([2.0, 0.0])])
        assert s.mu.tolist() == [1.0, 0.0]
        assert s.sigma.tolist() == [[2.0, 0.0], [0.0, 0.0]]

    def test_ragged_input_is_error(self):
        with pytest.raises(ValueError, match="ragged"):
            embedding_stats([np.zeros(3), np.zeros(4)])

    def test_single_vector_is_error(self):
        with pytest.raises(ValueError):
            embedding_stats([np.zeros(3)])


class TestFrechet:
    def _stats(self, mu, sigma):
        return EmbeddingStats(mu=np.asarray(mu, float), sigma=np.asarray(sigma, float), n=10)

    def test_identical_stats_zero(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((20, 4))
        s = embedding_stats(list(x))
        assert frechet_distance(s, s) < 1e-6

    def test_one_dimensional_closed_form(self):
        a = self._stats([0.0], [[1.0]])
        b = self._stats([1.0], [[4.0]])
        assert frechet_distance(a, b) == pytest.approx(2.0, abs=1e-9)

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        s1 = embedding_stats(list(rng.standard_normal((12, 5))))
        s2 = embedding_stats(list(rng.standard_normal((15, 5)) * 2 + 1))
        assert frechet_distance(s1, s2) == pytest.approx(
            frechet_distance(s2, s1), abs=1e-9
        )

    def test_diagonal_matches_per_axis_sum(self):
        a = self._stats([0.0, 1.0], np.diag([1.0, 2.0]))
        b = self._stats([2.0, 0.0], np.diag([4.0, 0.5]))
        expected = (
            (0 - 2) ** 2 + (np.sqrt(1) - np.sqrt(4)) ** 2
            + (1 - 0) ** 2 + (np.sqrt(2) - np.sqrt(0.5)) ** 2
        )
        assert frechet_distance(a, b) == pytest.approx(expected, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            frechet_distance(self._stats([0.0], [[1.0]]), self._stats([0.0, 0.0], np.eye(2)))

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError, match="PSD"):
            frechet_distance(
                self._stats([0.0, 0.0], [[1.0, 0.0], [0.0, -0.5]]),
                self._stats([0.0, 0.0], np.eye(2)),
            )


class TestBuiltinEmbedders:
    def test_image_embedding_deterministic(self, road_tile):
        img, _ = road_tile
        assert np.array_equal(image_embedding(img), image_embedding(img))

    def test_patch_embeddings_give_valid_stats(self, road_tile):
        img, _ = road_tile
        vecs = patch_embeddings(img)
        assert vecs.shape[0] >= 2
        s = embedding_stats(vecs)
        assert frechet_distance(s, s) < 1e-6

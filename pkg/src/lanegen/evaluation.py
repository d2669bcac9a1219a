"""CULane-protocol lane scoring and Fréchet distance over pluggable embeddings.

Lanes are compared by rasterizing each polyline as a wide stroke (30 px total
width at the native 1640x590 canvas, scaled proportionally elsewhere) and
taking pixel IoU. Predictions are matched to ground truth with an optimal
assignment: maximum cardinality first, then maximum total IoU, ties resolved
toward the lowest (pred, gt) indices.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .control import LaneAnnotation

CULANE_CANVAS = (1640, 590)
CULANE_LANE_WIDTH = 30.0

# F1 is averaged over this alpha grid for mF1 (10 values, 0.5 to 0.95).
MF1_GRID = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

TABLE_COLUMNS = ("Normal", "Snow", "Rain", "Fog", "Night", "Dusk", "F1@50", "F1@75", "mF1")


@dataclass(frozen=True)
class EvalConfig:
    canvas: tuple = CULANE_CANVAS
    lane_width: float | None = None
    iou_thresholds: tuple = (0.5, 0.75)

    def __post_init__(self):
        w, h = self.canvas
        if w < 1 or h < 1:
            raise ValueError("canvas must be positive")
        for a in self.iou_thresholds:
            if not (0 < a <= 1):
                raise ValueError(f"IoU threshold {a} outside (0, 1]")
        if self.width_px < 1:
            raise ValueError("effective lane width must be >= 1 px")

    @property
    def width_px(self) -> float:
        """Stroke width: 30 px at CULane scale, proportional to canvas width."""
        if self.lane_width is not None:
            return float(self.lane_width)
        return CULANE_LANE_WIDTH * self.canvas[0] / CULANE_CANVAS[0]


def rasterize_lane(lane: np.ndarray, cfg: EvalConfig) -> np.ndarray:
    pts = np.asarray(lane, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise ValueError("lane needs at least 2 points")
    segs = np.hstack([pts[:-1], pts[1:]])
    w, h = cfg.canvas
    return kernels.rasterize_segments(segs, h, w, cfg.width_px / 2.0)


def lane_iou(a: np.ndarray, b: np.ndarray, cfg: EvalConfig) -> float:
    """IoU of two lanes' widened footprints; empty union counts as 0."""
    ra = rasterize_lane(a, cfg).astype(bool)
    rb = rasterize_lane(b, cfg).astype(bool)
    union = int(np.count_nonzero(ra | rb))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(ra & rb)) / union


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple = ()


def iou_matrix(preds: LaneAnnotation, gts: LaneAnnotation, cfg: EvalConfig) -> np.ndarray:
    pred_masks = [rasterize_lane(lane, cfg).astype(bool) for lane in preds.lanes]
    gt_masks = [rasterize_lane(lane, cfg).astype(bool) for lane in gts.lanes]
    ious = np.zeros((len(pred_masks), len(gt_masks)))
    for i, pm in enumerate(pred_masks):
        for j, gm in enumerate(gt_masks):
            union = int(np.count_nonzero(pm | gm))
            ious[i, j] = int(np.count_nonzero(pm & gm)) / union if union else 0.0
    return ious


def match_from_matrix(ious: np.ndarray, alpha: float) -> MatchResult:
    """Optimal matching on a precomputed IoU matrix at threshold alpha."""
    n, m = ious.shape
    valid = ious >= alpha
    if n == 0 or m == 0 or not valid.any():
        return MatchResult(tp=0, fp=n, fn=m)
    # Cardinality dominates total IoU: every valid edge carries a bonus larger
    # than any possible IoU sum. A sub-1e-9 geometric bias resolves exact ties
    # toward low (pred, gt) indices (each rank outweighs all later ranks
    # combined) without disturbing distinct optima.
    bonus = max(n, m) + 1.0
    weights = np.where(valid, ious + bonus, 0.0)
    rank = np.arange(n)[:, None] * m + np.arange(m)[None, :]
    weights = weights + 1e-9 * np.exp2(-np.minimum(rank, 500.0))
    rows, cols = linear_sum_assignment(-weights)
    pairs = sorted(
        (int(i), int(j), float(ious[i, j]))
        for i, j in zip(rows, cols)
        if valid[i, j]
    )
    tp = len(pairs)
    return MatchResult(tp=tp, fp=n - tp, fn=m - tp, pairs=tuple(pairs))


def match_lanes(
    preds: LaneAnnotation, gts: LaneAnnotation, alpha: float, cfg: EvalConfig
) -> MatchResult:
    if not (0 < alpha <= 1):
        raise ValueError(f"alpha {alpha} outside (0, 1]")
    return match_from_matrix(iou_matrix(preds, gts, cfg), alpha)


def f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """(precision, recall, F1) with every 0/0 defined as 0."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class F1Summary:
    """Accumulated counts and scores over one dataset, keyed by alpha."""

    counts: dict = field(default_factory=dict)
    precision: dict = field(default_factory=dict)
    recall: dict = field(default_factory=dict)
    f1: dict = field(default_factory=dict)
    mf1: float = 0.0

    def f1_at(self, alpha: float) -> float:
        return self.f1[round(alpha, 2)]

    def to_dict(self) -> dict:
        return {
            "counts": {str(a): list(c) for a, c in sorted(self.counts.items())},
            "precision": {str(a): v for a, v in sorted(self.precision.items())},
            "recall": {str(a): v for a, v in sorted(self.recall.items())},
            "f1": {str(a): v for a, v in sorted(self.f1.items())},
            "mf1": self.mf1,
        }


def f1_sweep(dataset: list, cfg: EvalConfig = EvalConfig()) -> F1Summary:
    """Score a dataset of (predictions, ground-truth) annotation pairs.

    Counts accumulate across images per alpha; mF1 is the arithmetic mean of
    F1 over the fixed 10-value grid.
    """
    alphas = sorted({round(a, 2) for a in cfg.iou_thresholds} | set(MF1_GRID))
    counts = {a: [0, 0, 0] for a in alphas}
    for preds, gts in dataset:
        ious = iou_matrix(preds, gts, cfg)
        for a in alphas:
            r = match_from_matrix(ious, a)
            counts[a][0] += r.tp
            counts[a][1] += r.fp
            counts[a][2] += r.fn
    summary = F1Summary(counts={a: tuple(c) for a, c in counts.items()})
    for a, (tp, fp, fn) in summary.counts.items():
        p, r, f1 = f1_from_counts(tp, fp, fn)
        summary.precision[a] = p
        summary.recall[a] = r
        summary.f1[a] = f1
    summary.mf1 = float(np.mean([summary.f1[a] for a in MF1_GRID]))
    return summary


@dataclass
class EvalReport:
    per_category: dict = field(default_factory=dict)
    overall: F1Summary = field(default_factory=F1Summary)
    fid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_category": {c: s.to_dict() for c, s in self.per_category.items()},
            "overall": self.overall.to_dict(),
            "fid": dict(self.fid),
        }


def evaluate_categories(datasets: dict, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Score per-category datasets plus the pooled overall row."""
    report = EvalReport()
    pooled = []
    for category, dataset in datasets.items():
        report.per_category[category] = f1_sweep(dataset, cfg)
        pooled.extend(dataset)
    report.overall = f1_sweep(pooled, cfg)
    return report


def render_table(report: EvalReport) -> str:
    """Aligned text table: per-category F1@50 columns, then overall scores."""
    values = []
    for name in TABLE_COLUMNS[:6]:
        summary = report.per_category.get(name.lower())
        values.append(f"{summary.f1_at(0.5) * 100:.2f}" if summary else "-")
    values.append(f"{report.overall.f1_at(0.5) * 100:.2f}")
    values.append(f"{report.overall.f1_at(0.75) * 100:.2f}")
    values.append(f"{report.overall.mf1 * 100:.2f}")
    widths = [max(len(h), len(v)) for h, v in zip(TABLE_COLUMNS, values)]
    header = "  ".join(h.rjust(w) for h, w in zip(TABLE_COLUMNS, widths))
    row = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return header + "\n" + row


@dataclass(frozen=True)
class EmbeddingStats:
    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.n < 2:
            raise ValueError("need at least 2 samples")
        if sigma.shape != (mu.size, mu.size):
            raise ValueError("covariance shape does not match mean")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def embedding_stats(vectors) -> EmbeddingStats:
    """Sample mean and unbiased covariance of a set of feature vectors."""
    rows = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if len(rows) < 2:
        raise ValueError("need at least 2 embedding vectors")
    dim = rows[0].size
    if any(r.size != dim for r in rows):
        raise ValueError("embedding vectors have ragged dimensions")
    mat = np.stack(rows)
    mu = mat.mean(axis=0)
    centered = mat - mu
    sigma = (centered.T @ centered) / (len(rows) - 1)
    sigma = (sigma + sigma.T) / 2.0
    return EmbeddingStats(mu=mu, sigma=sigma, n=len(rows))


def _psd_sqrt(sym: np.ndarray, tol: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sym)
    scale = max(abs(vals).max(), 1.0)
    if vals.min() < -tol * scale:
        raise ValueError(f"matrix not PSD within tolerance (min eigenvalue {vals.min():g})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: EmbeddingStats, b: EmbeddingStats, tol: float = 1e-8) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), clamped >= 0.

    The cross term uses Tr((A^{1/2} B A^{1/2})^{1/2}), the symmetrized form of
    the product square root; eigenvalues below -tol (relative) are an error,
    small negatives are clamped.
    """
    if a.mu.size != b.mu.size:
        raise ValueError("embedding dimensions differ")
    root_a = _psd_sqrt(a.sigma, tol)
    inner = root_a @ b.sigma @ root_a
    inner = (inner + inner.T) / 2.0
    vals = np.linalg.eigh(inner)[0]
    scale = max(abs(vals).max(), 1.0)
    if vals.min() < -tol * scale:
        raise ValueError("covariance product not PSD within tolerance")
    tr_sqrt = np.sqrt(np.clip(vals, 0.0, None)).sum()
    diff = a.mu - b.mu
    dist = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * tr_sqrt)
    return max(dist, 0.0)


# Built-in embedders: fixed random projections of block statistics. They are
# documented regression features, not a perceptual model.
_FEATURE_SEED = 0x46494445
_IMAGE_GRID = 8
_IMAGE_DIM = 64
_PATCH_DIM = 16

_proj_cache: dict = {}


def _projection(rows: int, cols: int, stream: int) -> np.ndarray:
    key = (rows, cols, stream)
    if key not in _proj_cache:
        rng = np.random.Generator(np.random.PCG64((_FEATURE_SEED, stream)))
        _proj_cache[key] = rng.standard_normal((rows, cols)) / math.sqrt(rows)
    return _proj_cache[key]


def _block_stats(img: np.ndarray, grid: int) -> np.ndarray:
    f = np.asarray(img, dtype=np.float64) / 255.0
    h, w = f.shape[:2]
    ys = np.linspace(0, h, grid + 1).astype(int)
    xs = np.linspace(0, w, grid + 1).astype(int)
    feats = np.zeros((grid * grid, 6))
    for i in range(grid):
        for j in range(grid):
            cell = f[ys[i] : max(ys[i + 1], ys[i] + 1), xs[j] : max(xs[j + 1], xs[j] + 1)]
            flat = cell.reshape(-1, 3)
            feats[i * grid + j, :3] = flat.mean(axis=0)
            feats[i * grid + j, 3:] = flat.std(axis=0)
    return feats


def image_embedding(img: np.ndarray) -> np.ndarray:
    """One pooled feature vector per image (for set-vs-set FID)."""
    feats = _block_stats(img, _IMAGE_GRID).ravel()
    return feats @ _projection(feats.size, _IMAGE_DIM, stream=0)


def patch_embeddings(img: np.ndarray) -> np.ndarray:
    """Per-cell feature vectors (for single-image FID in the seed sweep)."""
    feats = _block_stats(img, _IMAGE_GRID)
    return feats @ _projection(feats.shape[1], _PATCH_DIM, stream=1)

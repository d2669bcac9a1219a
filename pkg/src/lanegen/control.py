"""Lane annotations and control-map fusion.

Annotations follow the CULane text convention: one lane per line, whitespace
separated ``x y`` pairs in pixel coordinates. The control map combines the
rasterized annotation (gated by the color mask) with Canny edges.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .imaging import ThresholdPair, canny, color_threshold, validate_image, validate_mask

DEFAULT_STROKE = 4.0


@dataclass
class LaneAnnotation:
    """Per-image lane polylines; each lane is an (n, 2) float64 array of (x, y)."""

    lanes: list = field(default_factory=list)

    def __post_init__(self):
        clean = []
        for lane in self.lanes:
            pts = np.asarray(lane, dtype=np.float64).reshape(-1, 2)
            if pts.shape[0] < 2:
                raise ValueError("each lane polyline needs at least 2 points")
            if not np.isfinite(pts).all():
                raise ValueError("lane coordinates must be finite")
            clean.append(pts)
        self.lanes = clean

    def __len__(self) -> int:
        return len(self.lanes)


def parse_annotation(text: str) -> LaneAnnotation:
    """Parse CULane-style annotation text, one polyline per nonempty line."""
    lanes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) % 2 != 0:
            raise ValueError(f"line {lineno}: odd coordinate count ({len(tokens)} tokens)")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric token") from exc
        points = np.array(values, dtype=np.float64).reshape(-1, 2)
        if points.shape[0] < 2:
            raise ValueError(f"line {lineno}: polyline needs at least 2 points")
        lanes.append(points)
    return LaneAnnotation(lanes)


def serialize_annotation(ann: LaneAnnotation) -> str:
    """Emit annotation text that reparses to an identical LaneAnnotation."""
    lines = []
    for lane in ann.lanes:
        lines.append(" ".join(repr(float(v)) for v in lane.ravel()))
    return "\n".join(lines) + ("\n" if lines else "")


def load_annotation(path) -> LaneAnnotation:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_annotation(fh.read())


def _lane_segments(ann: LaneAnnotation) -> np.ndarray:
    segs = []
    for lane in ann.lanes:
        for i in range(lane.shape[0] - 1):
            segs.append((lane[i, 0], lane[i, 1], lane[i + 1, 0], lane[i + 1, 1]))
    if not segs:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array(segs, dtype=np.float64)


def rasterize_annotation(
    ann: LaneAnnotation, width: int, height: int, stroke: float = DEFAULT_STROKE
) -> np.ndarray:
    """Draw each polyline as a stroke of the given width; out-of-frame parts clip.

    A pixel is set when its center lies within ``stroke / 2`` of any segment,
    so ``stroke=1`` reproduces the Bresenham set for axis-aligned segments.
    """
    if width < 1 or height < 1:
        raise ValueError("canvas must be at least 1x1")
    if stroke < 1:
        raise ValueError("stroke width must be >= 1")
    return kernels.rasterize_segments(_lane_segments(ann), height, width, stroke / 2.0)


def fuse(ann_mask: np.ndarray, color_mask: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Control map: (annotation AND color-mask) OR edges, pixel-wise."""
    ann_mask = validate_mask(ann_mask)
    color_mask = validate_mask(color_mask)
    edges = validate_mask(edges)
    if not (ann_mask.shape == color_mask.shape == edges.shape):
        raise ValueError(
            f"mask dimensions differ: {ann_mask.shape}, {color_mask.shape}, {edges.shape}"
        )
    return ((ann_mask & color_mask) | edges).astype(np.uint8)


def build_control_map(
    img: np.ndarray,
    ann: LaneAnnotation,
    t: ThresholdPair = ThresholdPair(),
    stroke: float = DEFAULT_STROKE,
) -> np.ndarray:
    """Fuse the rasterized annotation, color mask, and Canny edges of an image."""
    img = validate_image(img)
    h, w = img.shape[:2]
    ann_mask = rasterize_annotation(ann, w, h, stroke)
    return fuse(ann_mask, color_threshold(img, t), canny(img, t))

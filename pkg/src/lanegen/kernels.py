"""Hot raster kernels: NMS, hysteresis, disc dilation, stroke rasterization.

Every kernel has a numba ``@njit`` build (``*_jit``) and a pure-numpy build
(``*_np``). The public dispatchers pick one via :mod:`lanegen.accel`. The two
builds evaluate the same arithmetic in the same order, so their outputs are
bit-identical; tests assert this parity on random inputs.

Geometry convention: masks are ``(height, width)`` uint8 arrays with values in
{0, 1}; points are ``(x, y)`` pixel-center coordinates, ``x`` along columns.
"""

import numpy as np

from .accel import njit, using_numba

# Non-maximum suppression neighbor offsets per quantized gradient direction.
# Row 2k is the "before" neighbor (strict compare), row 2k+1 the "after"
# neighbor (non-strict); the asymmetry resolves plateau ties to a 1-px line.
_NMS_OFFSETS = np.array(
    [
        [0, -1], [0, 1],     # direction 0: horizontal gradient, E/W neighbors
        [-1, -1], [1, 1],    # direction 1: 45-degree diagonal
        [-1, 0], [1, 0],     # direction 2: vertical gradient, N/S neighbors
        [-1, 1], [1, -1],    # direction 3: 135-degree diagonal
    ],
    dtype=np.int64,
)


@njit(cache=True)
def _nms_jit(mag, qdir, offsets):
    h, w = mag.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            m = mag[y, x]
            d = qdir[y, x]
            by = y + offsets[2 * d, 0]
            bx = x + offsets[2 * d, 1]
            ay = y + offsets[2 * d + 1, 0]
            ax = x + offsets[2 * d + 1, 1]
            before = mag[by, bx] if 0 <= by < h and 0 <= bx < w else 0.0
            after = mag[ay, ax] if 0 <= ay < h and 0 <= ax < w else 0.0
            if m > before and m >= after:
                out[y, x] = 1
    return out


def _nms_np(mag, qdir, offsets):
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2), dtype=mag.dtype)
    padded[1:-1, 1:-1] = mag
    out = np.zeros((h, w), dtype=np.uint8)
    for d in range(4):
        boff = offsets[2 * d]
        aoff = offsets[2 * d + 1]
        before = padded[1 + boff[0] : 1 + boff[0] + h, 1 + boff[1] : 1 + boff[1] + w]
        after = padded[1 + aoff[0] : 1 + aoff[0] + h, 1 + aoff[1] : 1 + aoff[1] + w]
        keep = (qdir == d) & (mag > before) & (mag >= after)
        out[keep] = 1
    return out


def nms_suppress(mag: np.ndarray, qdir: np.ndarray) -> np.ndarray:
    """Thin gradient magnitude to 1-px ridges along the gradient direction."""
    if using_numba():
        return _nms_jit(mag, qdir, _NMS_OFFSETS)
    return _nms_np(mag, qdir, _NMS_OFFSETS)


@njit(cache=True)
def _hysteresis_jit(strong, weak):
    h, w = strong.shape
    out = np.zeros((h, w), dtype=np.uint8)
    stack = np.empty(h * w, dtype=np.int64)
    top = 0
    for y in range(h):
        for x in range(w):
            if strong[y, x]:
                out[y, x] = 1
                stack[top] = y * w + x
                top += 1
    while top > 0:
        top -= 1
        idx = stack[top]
        y = idx // w
        x = idx % w
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                ny = y + dy
                nx = x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not out[ny, nx]:
                    out[ny, nx] = 1
                    stack[top] = ny * w + nx
                    top += 1
    return out


def _hysteresis_np(strong, weak):
    cur = strong.astype(bool)
    weak_b = weak.astype(bool)
    while True:
        grown = cur.copy()
        grown[1:, :] |= cur[:-1, :]
        grown[:-1, :] |= cur[1:, :]
        grown[:, 1:] |= cur[:, :-1]
        grown[:, :-1] |= cur[:, 1:]
        grown[1:, 1:] |= cur[:-1, :-1]
        grown[1:, :-1] |= cur[:-1, 1:]
        grown[:-1, 1:] |= cur[1:, :-1]
        grown[:-1, :-1] |= cur[1:, 1:]
        grown &= weak_b
        grown |= cur
        if np.array_equal(grown, cur):
            return cur.astype(np.uint8)
        cur = grown


def hysteresis_connect(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    """Keep weak edge pixels 8-connected to a strong seed (strong included)."""
    if using_numba():
        return _hysteresis_jit(strong.astype(np.uint8), weak.astype(np.uint8))
    return _hysteresis_np(strong, weak)


def disc_offsets(radius: float) -> np.ndarray:
    """Integer offsets within Euclidean distance ``radius`` of the origin."""
    r = int(np.floor(radius))
    r2 = float(radius) * float(radius)
    offs = []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy * dy + dx * dx <= r2:
                offs.append((dy, dx))
    return np.array(offs, dtype=np.int64).reshape(-1, 2)


@njit(cache=True)
def _dilate_jit(mask, offsets):
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.uint8)
    n = offsets.shape[0]
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                for k in range(n):
                    ny = y + offsets[k, 0]
                    nx = x + offsets[k, 1]
                    if 0 <= ny < h and 0 <= nx < w:
                        out[ny, nx] = 1
    return out


def _dilate_np(mask, offsets):
    h, w = mask.shape
    src = mask.astype(bool)
    out = np.zeros((h, w), dtype=bool)
    for dy, dx in offsets:
        ys = slice(max(dy, 0), h + min(dy, 0))
        xs = slice(max(dx, 0), w + min(dx, 0))
        ys_src = slice(max(-dy, 0), h + min(-dy, 0))
        xs_src = slice(max(-dx, 0), w + min(-dx, 0))
        out[ys, xs] |= src[ys_src, xs_src]
    return out.astype(np.uint8)


def dilate_disc(mask: np.ndarray, radius: float) -> np.ndarray:
    """Morphological dilation of a binary mask by a Euclidean disc."""
    offsets = disc_offsets(radius)
    if using_numba():
        return _dilate_jit(np.ascontiguousarray(mask, dtype=np.uint8), offsets)
    return _dilate_np(mask, offsets)


@njit(cache=True)
def _stroke_jit(segments, height, width, half_width):
    out = np.zeros((height, width), dtype=np.uint8)
    hw2 = half_width * half_width
    for s in range(segments.shape[0]):
        x1 = segments[s, 0]
        y1 = segments[s, 1]
        x2 = segments[s, 2]
        y2 = segments[s, 3]
        xmin = max(0, int(np.ceil(min(x1, x2) - half_width)))
        xmax = min(width - 1, int(np.floor(max(x1, x2) + half_width)))
        ymin = max(0, int(np.ceil(min(y1, y2) - half_width)))
        ymax = min(height - 1, int(np.floor(max(y1, y2) + half_width)))
        vx = x2 - x1
        vy = y2 - y1
        l2 = vx * vx + vy * vy
        for py in range(ymin, ymax + 1):
            for px in range(xmin, xmax + 1):
                if l2 > 0.0:
                    t = ((px - x1) * vx + (py - y1) * vy) / l2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                    qx = x1 + t * vx
                    qy = y1 + t * vy
                else:
                    qx = x1
                    qy = y1
                dx = px - qx
                dy = py - qy
                if dx * dx + dy * dy <= hw2:
                    out[py, px] = 1
    return out


def _stroke_np(segments, height, width, half_width):
    out = np.zeros((height, width), dtype=np.uint8)
    hw2 = half_width * half_width
    for s in range(segments.shape[0]):
        x1, y1, x2, y2 = segments[s]
        xmin = max(0, int(np.ceil(min(x1, x2) - half_width)))
        xmax = min(width - 1, int(np.floor(max(x1, x2) + half_width)))
        ymin = max(0, int(np.ceil(min(y1, y2) - half_width)))
        ymax = min(height - 1, int(np.floor(max(y1, y2) + half_width)))
        if xmin > xmax or ymin > ymax:
            continue
        px, py = np.meshgrid(
            np.arange(xmin, xmax + 1, dtype=np.float64),
            np.arange(ymin, ymax + 1, dtype=np.float64),
        )
        vx = x2 - x1
        vy = y2 - y1
        l2 = vx * vx + vy * vy
        if l2 > 0.0:
            t = ((px - x1) * vx + (py - y1) * vy) / l2
            np.clip(t, 0.0, 1.0, out=t)
            qx = x1 + t * vx
            qy = y1 + t * vy
        else:
            qx = np.full_like(px, x1)
            qy = np.full_like(py, y1)
        dx = px - qx
        dy = py - qy
        hit = dx * dx + dy * dy <= hw2
        out[ymin : ymax + 1, xmin : xmax + 1] |= hit.astype(np.uint8)
    return out


def rasterize_segments(
    segments: np.ndarray, height: int, width: int, half_width: float
) -> np.ndarray:
    """Render line segments as a stroke: pixel centers within ``half_width``.

    ``segments`` is ``(n, 4)`` float64 rows ``(x1, y1, x2, y2)``. Parts outside
    the canvas are clipped by construction.
    """
    segments = np.ascontiguousarray(segments, dtype=np.float64).reshape(-1, 4)
    if using_numba():
        return _stroke_jit(segments, height, width, float(half_width))
    return _stroke_np(segments, height, width, float(half_width))

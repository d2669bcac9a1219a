"""Independent slow-path oracles used across the test suite.

These re-derive expected values by exhaustive enumeration or direct scalar
evaluation of the documented math; they never call the production fast paths.
"""

import itertools

import numpy as np


def stroke_mask_bruteforce(lanes, width, height, stroke_width):
    """Full-canvas rasterization: test every pixel center against every segment."""
    hw2 = (stroke_width / 2.0) ** 2
    px, py = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    out = np.zeros((height, width), dtype=bool)
    for lane in lanes:
        pts = np.asarray(lane, dtype=np.float64)
        for (x1, y1), (x2, y2) in zip(pts[:-1], pts[1:]):
            vx, vy = x2 - x1, y2 - y1
            l2 = vx * vx + vy * vy
            if l2 > 0.0:
                t = ((px - x1) * vx + (py - y1) * vy) / l2
                np.clip(t, 0.0, 1.0, out=t)
                qx, qy = x1 + t * vx, y1 + t * vy
            else:
                qx, qy = np.full_like(px, x1), np.full_like(py, y1)
            dx, dy = px - qx, py - qy
            out |= dx * dx + dy * dy <= hw2
    return out


def dilate_bruteforce(mask, radius):
    """Per-pixel nearest-set-pixel distance check."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    out = np.zeros((h, w), dtype=np.uint8)
    if len(ys) == 0:
        return out
    r2 = float(radius) * float(radius)
    for y in range(h):
        for x in range(w):
            d2 = (ys - y) ** 2 + (xs - x) ** 2
            if (d2 <= r2).any():
                out[y, x] = 1
    return out


def iou_bruteforce(lane_a, lane_b, width, height, stroke_width):
    ra = stroke_mask_bruteforce([lane_a], width, height, stroke_width)
    rb = stroke_mask_bruteforce([lane_b], width, height, stroke_width)
    union = int(np.count_nonzero(ra | rb))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(ra & rb)) / union


def assignment_bruteforce(ious, alpha):
    """Exhaustive optimum over all assignments: (max cardinality, max IoU sum).

    Pads to a square and enumerates full permutations; every partial matching
    extends to a permutation, so the optimum is covered.
    """
    n, m = ious.shape
    if n == 0 or m == 0:
        return 0, 0.0
    size = max(n, m)
    best_k, best_total = 0, 0.0
    for perm in itertools.permutations(range(size)):
        k, total = 0, 0.0
        for i, j in enumerate(perm):
            if i < n and j < m and ious[i, j] >= alpha:
                k += 1
                total += ious[i, j]
        if (k, total) > (best_k, best_total):
            best_k, best_total = k, total
    return best_k, best_total


def f1_counts_bruteforce(dataset, alphas, width, height, stroke_width):
    """Accumulated (tp, fp, fn) per alpha via brute-force raster + enumeration."""
    counts = {a: [0, 0, 0] for a in alphas}
    for preds, gts in dataset:
        n, m = len(preds.lanes), len(gts.lanes)
        ious = np.zeros((n, m))
        for i in range(n):
            for j in range(m):
                ious[i, j] = iou_bruteforce(
                    preds.lanes[i], gts.lanes[j], width, height, stroke_width
                )
        for a in alphas:
            tp, _ = assignment_bruteforce(ious, a)
            counts[a][0] += tp
            counts[a][1] += n - tp
            counts[a][2] += m - tp
    return {a: tuple(c) for a, c in counts.items()}


def canny_reference(img, low, high, sigma=1.4):
    """Scalar step-by-step Canny: blur, Sobel, NMS, hysteresis.

    Mirrors the documented operator definitions with plain loops (separable
    blur passes, per-pixel stencils, queue-based hysteresis).
    """
    gray = np.asarray(img, dtype=np.float64).mean(axis=2)
    h, w = gray.shape

    half = 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    k /= k.sum()
    clampx = lambda x: min(max(x, 0), w - 1)
    clampy = lambda y: min(max(y, 0), h - 1)
    tmp = np.zeros_like(gray)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i, kv in enumerate(k):
                acc += kv * gray[y, clampx(x + i - half)]
            tmp[y, x] = acc
    blur = np.zeros_like(gray)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i, kv in enumerate(k):
                acc += kv * tmp[clampy(y + i - half), x]
            blur[y, x] = acc

    gx = np.zeros_like(blur)
    gy = np.zeros_like(blur)
    for y in range(h):
        for x in range(w):
            c = lambda dy, dx: blur[clampy(y + dy), clampx(x + dx)]
            gx[y, x] = (c(-1, 1) + 2.0 * c(0, 1) + c(1, 1)) - (
                c(-1, -1) + 2.0 * c(0, -1) + c(1, -1)
            )
            gy[y, x] = (c(1, -1) + 2.0 * c(1, 0) + c(1, 1)) - (
                c(-1, -1) + 2.0 * c(-1, 0) + c(-1, 1)
            )
    mag = np.hypot(gx, gy)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0

    neighbor = {
        0: ((0, -1), (0, 1)),
        1: ((-1, -1), (1, 1)),
        2: ((-1, 0), (1, 0)),
        3: ((-1, 1), (1, -1)),
    }
    ridge = np.zeros_like(mag)
    for y in range(h):
        for x in range(w):
            a = angle[y, x]
            if a < 22.5 or a >= 157.5:
                d = 0
            elif a < 67.5:
                d = 1
            elif a < 112.5:
                d = 2
            else:
                d = 3
            (bdy, bdx), (ady, adx) = neighbor[d]
            by, bx = y + bdy, x + bdx
            ay, ax = y + ady, x + adx
            before = mag[by, bx] if 0 <= by < h and 0 <= bx < w else 0.0
            after = mag[ay, ax] if 0 <= ay < h and 0 <= ax < w else 0.0
            if mag[y, x] > before and mag[y, x] >= after:
                ridge[y, x] = mag[y, x]

    strong = ridge > high
    weak = ridge > low
    out = strong.copy()
    queue = list(zip(*np.nonzero(strong)))
    while queue:
        y, x = queue.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not out[ny, nx]:
                    out[ny, nx] = True
                    queue.append((ny, nx))
    return out.astype(np.uint8)

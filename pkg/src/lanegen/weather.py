"""Deterministic procedural weather overlays.

Fallback backend so the full pipeline and evaluation run without any diffusion
model. Each transform is a pure function of (image, category, seed); pixels
under the protect mask are copied from the source unchanged (the lane-label
preservation bound is exactly zero).
"""

import numpy as np

from .imaging import validate_image, validate_mask

ADVERSE_CATEGORIES = ("snow", "rain", "fog", "night", "dusk")

_CATEGORY_STREAM = {name: i + 1 for i, name in enumerate(ADVERSE_CATEGORIES)}

FOG_BLEND = 0.7
NIGHT_GAMMA = 1.8
NIGHT_GAIN = 0.55
NIGHT_CHANNEL_SCALE = (0.82, 0.88, 1.0)
DUSK_TINT = (255.0, 150.0, 70.0)


def _rng(seed: int, category: str) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, _CATEGORY_STREAM[category])))
    )


def _luminance(img: np.ndarray) -> np.ndarray:
    return img.astype(np.float64).mean(axis=2)


def gray_ramp(height: int, width: int) -> np.ndarray:
    """Fog target: a vertical gray gradient, brighter toward the top."""
    ys = np.arange(height, dtype=np.float64)
    denom = max(height - 1, 1)
    column = 215.0 - 35.0 * (ys / denom)
    return np.repeat(np.round(column)[:, None], width, axis=1)


def _apply_fog(img: np.ndarray, rng: np.random.Generator, blend: float) -> np.ndarray:
    h, w = img.shape[:2]
    ramp = gray_ramp(h, w)[:, :, None]
    jitter = rng.uniform(-6.0, 6.0, size=(h, w, 1))
    out = (1.0 - blend) * (img.astype(np.float64) + jitter) + blend * ramp
    return out


def _apply_rain(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    h, w = img.shape[:2]
    f = img.astype(np.float64)
    gray = _luminance(img)[:, :, None]
    out = 0.62 * f + 0.38 * gray - 14.0
    n_streaks = max(1, (h * w) // 260)
    ys = rng.integers(0, h, size=n_streaks)
    xs = rng.integers(0, w, size=n_streaks)
    lengths = rng.integers(4, 11, size=n_streaks)
    streaks = np.zeros((h, w), dtype=bool)
    for step in range(int(lengths.max())):
        alive = step < lengths
        py = ys[alive] + step
        px = xs[alive] + step // 2
        keep = (py < h) & (px < w)
        streaks[py[keep], px[keep]] = True
    out[streaks] += 58.0
    return out


def _apply_snow(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    h, w = img.shape[:2]
    out = img.astype(np.float64) * 0.92 + 30.0
    n_flakes = max(1, (h * w) // 320)
    ys = rng.integers(0, h, size=n_flakes)
    xs = rng.integers(0, w, size=n_flakes)
    radii = rng.integers(0, 2, size=n_flakes)
    flakes = np.zeros((h, w), dtype=bool)
    flakes[ys, xs] = True
    big = np.zeros((h, w), dtype=bool)
    big[ys[radii > 0], xs[radii > 0]] = True
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        shifted = np.zeros_like(big)
        src_y = slice(max(-dy, 0), h - max(dy, 0))
        dst_y = slice(max(dy, 0), h - max(-dy, 0))
        src_x = slice(max(-dx, 0), w - max(dx, 0))
        dst_x = slice(max(dx, 0), w - max(-dx, 0))
        shifted[dst_y, dst_x] = big[src_y, src_x]
        flakes |= shifted
    out[flakes] = 238.0
    return out


def _apply_night(img: np.ndarray) -> np.ndarray:
    f = img.astype(np.float64) / 255.0
    darkened = 255.0 * np.power(f, NIGHT_GAMMA) * NIGHT_GAIN
    return darkened * np.asarray(NIGHT_CHANNEL_SCALE)


def _apply_dusk(img: np.ndarray) -> np.ndarray:
    h = img.shape[0]
    denom = max(h - 1, 1)
    alpha = (0.45 - 0.40 * (np.arange(h, dtype=np.float64) / denom))[:, None, None]
    tint = np.asarray(DUSK_TINT)
    return (1.0 - alpha) * img.astype(np.float64) * 0.88 + alpha * tint


def procedural_weather(
    img: np.ndarray,
    category: str,
    seed: int,
    protect: np.ndarray | None = None,
    fog_blend: float = FOG_BLEND,
) -> np.ndarray:
    """Apply the seeded overlay for an adverse category.

    ``protect`` is typically the dilated lane-annotation mask; those pixels are
    returned unchanged. ``category="normal"`` is an error: there is nothing to
    synthesize.
    """
    img = validate_image(img)
    if category == "normal":
        raise ValueError("procedural weather is undefined for the normal category")
    if category not in ADVERSE_CATEGORIES:
        raise ValueError(f"unknown category: {category!r}")
    rng = _rng(seed, category)
    if category == "fog":
        out = _apply_fog(img, rng, fog_blend)
    elif category == "rain":
        out = _apply_rain(img, rng)
    elif category == "snow":
        out = _apply_snow(img, rng)
    elif category == "night":
        out = _apply_night(img)
    else:
        out = _apply_dusk(img)
    out = np.clip(np.round(out), 0, 255).astype(np.uint8)
    if protect is not None:
        protect = validate_mask(protect)
        if protect.shape != img.shape[:2]:
            raise ValueError("protect mask dimensions differ from image")
        out = np.where(protect[:, :, None].astype(bool), img, out)
    return out

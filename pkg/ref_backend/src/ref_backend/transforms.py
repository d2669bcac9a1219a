"""Procedural weather transforms for the reference backend.

Independent of the toolkit's in-process transforms: only the contract is
shared (deterministic per seed, dimension preserving, pixels under the control
map left untouched), not the pixels.
"""

import numpy as np

_CATEGORY_CODE = {"snow": 1, "rain": 2, "fog": 3, "night": 4, "dusk": 5}


def _rng(seed: int, category: str) -> np.random.Generator:
    return np.random.default_rng((abs(int(seed)), _CATEGORY_CODE[category]))


def apply_weather(img: np.ndarray, category: str, seed: int,
                  protect: np.ndarray | None = None) -> np.ndarray:
    """Seeded overlay for one category; ``normal`` is the identity."""
    if category == "normal":
        return img.copy()
    f = img.astype(np.float64)
    h, w = f.shape[:2]
    rng = _rng(seed, category)
    if category == "night":
        out = f * np.array([0.38, 0.42, 0.55])
    elif category == "fog":
        veil = 205.0 + rng.uniform(-4, 4, (h, w, 1))
        out = 0.35 * f + 0.65 * veil
    elif category == "dusk":
        alpha = np.linspace(0.5, 0.1, h)[:, None, None]
        out = (1 - alpha) * f * 0.9 + alpha * np.array([250.0, 150.0, 80.0])
    elif category == "rain":
        gray = f.mean(axis=2, keepdims=True)
        out = 0.65 * f + 0.35 * gray - 10.0
        drops = rng.random((h, w)) < 0.02
        out[drops] += 70.0
    else:  # snow
        out = f * 0.9 + 25.0
        flakes = rng.random((h, w)) < 0.03
        out[flakes] = 240.0
    out = np.clip(np.round(out), 0, 255).astype(np.uint8)
    if protect is not None:
        lane = protect.any(axis=2) if protect.ndim == 3 else protect.astype(bool)
        out = np.where(lane[:, :, None], img, out)
    return out

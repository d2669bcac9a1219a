"""Raster primitives: color thresholding, Canny edges, disc dilation, PNG I/O.

Images are ``(height, width, 3)`` uint8 arrays; binary masks are
``(height, width)`` uint8 arrays with values in {0, 1}. All operators are pure:
identical inputs give bit-identical outputs.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import kernels

DEFAULT_COLOR_LOW = (140, 140, 140)
DEFAULT_COLOR_HIGH = (255, 255, 255)
DEFAULT_BLUR_SIGMA = 1.4


@dataclass(frozen=True)
class ThresholdPair:
    """Per-channel color bounds, also projected to scalar Canny thresholds.

    The same pair drives both the color mask and edge sensitivity; the Canny
    hysteresis thresholds are the channel means of ``low`` and ``high``.
    """

    low: tuple[float, float, float] = DEFAULT_COLOR_LOW
    high: tuple[float, float, float] = DEFAULT_COLOR_HIGH

    def __post_init__(self):
        if len(self.low) != 3 or len(self.high) != 3:
            raise ValueError("threshold bounds must have 3 channels")
        if any(lo > hi for lo, hi in zip(self.low, self.high)):
            raise ValueError("low threshold exceeds high threshold")

    @property
    def canny_low(self) -> float:
        return float(np.mean(self.low))

    @property
    def canny_high(self) -> float:
        return float(np.mean(self.high))


def validate_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"expected (h, w, 3) uint8 image, got {img.shape} {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def validate_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected (h, w) mask, got shape {mask.shape}")
    if mask.dtype != np.uint8 or (mask > 1).any():
        raise ValueError("mask values must be uint8 in {0, 1}")
    return mask


def color_threshold(img: np.ndarray, t: ThresholdPair) -> np.ndarray:
    """Mask of pixels whose every channel lies inside [low, high]."""
    img = validate_image(img)
    low = np.asarray(t.low, dtype=np.float64)
    high = np.asarray(t.high, dtype=np.float64)
    f = img.astype(np.float64)
    inside = ((f >= low) & (f <= high)).all(axis=2)
    return inside.astype(np.uint8)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Channel-mean luminance, float64."""
    return np.asarray(img, dtype=np.float64).mean(axis=2)


def gaussian_kernel_1d(sigma: float, size: int = 5) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("blur_sigma must be positive")
    half = size // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(gray: np.ndarray, sigma: float) -> np.ndarray:
    """Separable 5x5 Gaussian with edge replication at the borders."""
    k = gaussian_kernel_1d(sigma)
    half = len(k) // 2
    padded = np.pad(gray, half, mode="edge")
    tmp = np.zeros_like(gray)
    for i, kv in enumerate(k):
        tmp += kv * padded[half : half + gray.shape[0], i : i + gray.shape[1]]
    padded = np.pad(tmp, half, mode="edge")
    out = np.zeros_like(gray)
    for i, kv in enumerate(k):
        out += kv * padded[i : i + gray.shape[0], half : half + gray.shape[1]]
    return out


def sobel_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel x/y derivatives with replicated borders."""
    p = np.pad(gray, 1, mode="edge")
    h, w = gray.shape
    c = lambda dy, dx: p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    gx = (c(-1, 1) + 2.0 * c(0, 1) + c(1, 1)) - (c(-1, -1) + 2.0 * c(0, -1) + c(1, -1))
    gy = (c(1, -1) + 2.0 * c(1, 0) + c(1, 1)) - (c(-1, -1) + 2.0 * c(-1, 0) + c(-1, 1))
    return gx, gy


def quantize_direction(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Bucket gradient angles into 4 classes: 0=E/W, 1=45deg, 2=N/S, 3=135deg."""
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    qdir = np.zeros(angle.shape, dtype=np.uint8)
    qdir[(angle >= 22.5) & (angle < 67.5)] = 1
    qdir[(angle >= 67.5) & (angle < 112.5)] = 2
    qdir[(angle >= 112.5) & (angle < 157.5)] = 3
    return qdir


def canny(
    img: np.ndarray, t: ThresholdPair, blur_sigma: float = DEFAULT_BLUR_SIGMA
) -> np.ndarray:
    """Canny edges: blur, Sobel, non-maximum suppression, hysteresis.

    Hysteresis thresholds are the luminance projections of ``t`` (channel
    means of low/high); weak edges survive only when 8-connected to a strong
    one. Raises on images smaller than 3x3, where the gradient stencil is
    undefined.
    """
    img = validate_image(img)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError("canny requires an image of at least 3x3 pixels")
    low, high = t.canny_low, t.canny_high
    if low > high:
        raise ValueError("canny low threshold exceeds high threshold")
    blurred = gaussian_blur(to_gray(img), blur_sigma)
    gx, gy = sobel_gradients(blurred)
    mag = np.hypot(gx, gy)
    thinned = kernels.nms_suppress(mag, quantize_direction(gx, gy))
    ridge = mag * thinned
    strong = ridge > high
    weak = ridge > low
    return kernels.hysteresis_connect(strong, weak)


def dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    """Dilate a binary mask with a Euclidean disc structuring element."""
    mask = validate_mask(mask)
    if radius < 0:
        raise ValueError("dilation radius must be >= 0")
    if radius == 0:
        return mask.copy()
    return kernels.dilate_disc(mask, radius)


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_image(path, img: np.ndarray) -> None:
    Image.fromarray(validate_image(img), mode="RGB").save(path)


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return (arr > 0).astype(np.uint8)


def write_mask(path, mask: np.ndarray) -> None:
    arr = validate_mask(mask) * np.uint8(255)
    Image.fromarray(arr, mode="L").save(path)

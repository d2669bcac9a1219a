"""Exactly invertible desk-scale latent codec and a binary latent container.

The codec is a space-to-depth pixel shuffle with a fixed affine map to roughly
unit scale: ``(h, w, 3)`` uint8 -> ``(h/p, w/p, 3*p*p)`` float64 in [-1, 1].
It stands in for a learned autoencoder; ``decode(encode(x)) == x`` holds
bit-exactly for every valid image.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .imaging import validate_image, validate_mask

MAGIC = b"LGLAT001"


@dataclass(frozen=True)
class LatentCodec:
    patch: int = 8

    def __post_init__(self):
        if self.patch < 1:
            raise ValueError("patch factor must be >= 1")

    @property
    def channels(self) -> int:
        return 3 * self.patch * self.patch

    def encode(self, img_or_map: np.ndarray) -> np.ndarray:
        """Encode an RGB image or a binary map into latent space."""
        arr = np.asarray(img_or_map)
        if arr.ndim == 2:
            arr = np.repeat(validate_mask(arr)[:, :, None] * np.uint8(255), 3, axis=2)
        arr = validate_image(arr)
        p = self.patch
        h, w = arr.shape[:2]
        if h % p != 0 or w % p != 0:
            raise ValueError(f"image {w}x{h} not divisible by patch factor {p}")
        z = (arr.astype(np.float64) - 127.5) / 127.5
        z = z.reshape(h // p, p, w // p, p, 3)
        return np.ascontiguousarray(z.transpose(0, 2, 1, 3, 4)).reshape(
            h // p, w // p, self.channels
        )

    def decode(self, z: np.ndarray) -> np.ndarray:
        """Invert ``encode``; out-of-range values are clamped, never an error."""
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 3 or z.shape[2] != self.channels:
            raise ValueError(
                f"latent shape {z.shape} inconsistent with patch factor {self.patch}"
            )
        p = self.patch
        hl, wl = z.shape[:2]
        x = z.reshape(hl, wl, p, p, 3).transpose(0, 2, 1, 3, 4)
        x = np.ascontiguousarray(x).reshape(hl * p, wl * p, 3)
        x = np.round(x * 127.5 + 127.5)
        return np.clip(x, 0, 255).astype(np.uint8)


def validate_latent(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 3:
        raise ValueError(f"latent must be rank-3, got shape {z.shape}")
    if not np.isfinite(z).all():
        raise ValueError("latent contains non-finite values")
    return z


def save_latent(path, z: np.ndarray) -> None:
    """Write a latent as: magic, 3 x uint32-LE shape, float64-LE row-major data."""
    z = validate_latent(z)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", *z.shape))
        fh.write(np.ascontiguousarray(z, dtype="<f8").tobytes())


def load_latent(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"bad latent container magic: {magic!r}")
        h, w, d = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != h * w * d:
        raise ValueError("latent container truncated")
    return data.reshape(h, w, d).astype(np.float64)

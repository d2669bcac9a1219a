"""Request validation and image codecs for the wire protocol.

The schema mirrors ``protocol/wire_protocol.md`` at the repository root:
schema violations are 400s, images that fail to decode are 422s.
"""

import base64
import binascii
import io

import numpy as np
from PIL import Image

CATEGORIES = ("normal", "snow", "rain", "fog", "night", "dusk")

_FIELDS = {
    "image": str,
    "control_map": str,
    "category": str,
    "positive_prompt": str,
    "negative_prompt": str,
    "stage2_prompt": (str, type(None)),
    "steps": int,
    "cfg_scale": (int, float),
    "seed": int,
}


class SchemaViolation(ValueError):
    """Maps to HTTP 400 / error.code bad_request."""


class UndecodableImage(ValueError):
    """Maps to HTTP 422 / error.code undecodable_image."""


def validate_schema(body) -> dict:
    if not isinstance(body, dict):
        raise SchemaViolation("request body must be a JSON object")
    for name, types in _FIELDS.items():
        if name not in body:
            raise SchemaViolation(f"missing field: {name}")
        if not isinstance(body[name], types) or isinstance(body[name], bool):
            raise SchemaViolation(f"field {name} has wrong type")
    if body["category"] not in CATEGORIES:
        raise SchemaViolation(f"unknown category: {body['category']!r}")
    if body["steps"] < 1:
        raise SchemaViolation("steps must be >= 1")
    if body["cfg_scale"] < 0:
        raise SchemaViolation("cfg_scale must be >= 0")
    return body


def decode_image(data: str, field: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise UndecodableImage(f"{field}: invalid base64: {exc}") from exc
    try:
        with Image.open(io.BytesIO(raw)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise UndecodableImage(f"{field}: not a decodable image: {exc}") from exc


def encode_image(img: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")

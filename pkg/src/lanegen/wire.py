"""Wire-format helpers for the generation backend protocol.

Requests and responses carry PNG images as base64 strings inside JSON; the
authoritative field list lives in ``protocol/wire_protocol.md`` at the repo
root and is enforced here on the client side.
"""

import base64
import io

import numpy as np
from PIL import Image

CATEGORIES = ("normal", "snow", "rain", "fog", "night", "dusk")

GENERATE_PATH = "/v1/generate"
HEALTH_PATH = "/v1/health"

REQUEST_FIELDS = {
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


def image_to_base64_png(img: np.ndarray) -> str:
    buf = io.BytesIO()
    if img.ndim == 2:
        Image.fromarray((img * np.uint8(255)), mode="L").save(buf, format="PNG")
    else:
        Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def base64_png_to_image(data: str) -> np.ndarray:
    raw = base64.b64decode(data, validate=True)
    with Image.open(io.BytesIO(raw)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def build_generate_request(
    img: np.ndarray,
    control_map: np.ndarray,
    category: str,
    positive_prompt: str,
    negative_prompt: str,
    stage2_prompt: str | None,
    steps: int,
    cfg_scale: float,
    seed: int,
) -> dict:
    return {
        "image": image_to_base64_png(img),
        "control_map": image_to_base64_png(control_map),
        "category": category,
        "positive_prompt": positive_prompt,
        "negative_prompt": negative_prompt,
        "stage2_prompt": stage2_prompt,
        "steps": int(steps),
        "cfg_scale": float(cfg_scale),
        "seed": int(seed),
    }


def validate_request_schema(body) -> str | None:
    """Return a human-readable schema violation, or None when valid."""
    if not isinstance(body, dict):
        return "request body must be a JSON object"
    for name, types in REQUEST_FIELDS.items():
        if name not in body:
            return f"missing field: {name}"
        if not isinstance(body[name], types) or isinstance(body[name], bool):
            return f"field {name} has wrong type"
    if body["category"] not in CATEGORIES:
        return f"unknown category: {body['category']!r}"
    if body["steps"] < 1:
        return "steps must be >= 1"
    if body["cfg_scale"] < 0:
        return "cfg_scale must be >= 0"
    return None

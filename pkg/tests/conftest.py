import numpy as np
import pytest

from lanegen.control import LaneAnnotation, serialize_annotation
from lanegen.imaging import write_image


def synthetic_road(width=64, height=32, seed=0):
    """Road-like test tile: dark asphalt, bright painted lane stripes."""
    rng = np.random.default_rng(seed)
    img = np.full((height, width, 3), 70, dtype=np.uint8)
    img += rng.integers(0, 12, size=img.shape, dtype=np.uint8)
    img[: height // 3] = (110, 140, 190)  # sky band
    lanes = [
        np.array([[width * 0.25, height - 1.0], [width * 0.45, height / 3.0]]),
        np.array([[width * 0.75, height - 1.0], [width * 0.55, height / 3.0]]),
    ]
    ann = LaneAnnotation(lanes)
    for lane in lanes:
        (x1, y1), (x2, y2) = lane
        for t in np.linspace(0, 1, 64):
            x = int(round(x1 + t * (x2 - x1)))
            y = int(round(y1 + t * (y2 - y1)))
            if 0 <= x < width and 0 <= y < height:
                img[y, max(x - 1, 0) : min(x + 2, width)] = 235
    return img, ann


def write_culane_pair(directory, stem, img, ann):
    directory.mkdir(parents=True, exist_ok=True)
    img_path = directory / f"{stem}.png"
    write_image(img_path, img)
    ann_path = directory / f"{stem}.lines.txt"
    ann_path.write_text(serialize_annotation(ann), encoding="utf-8")
    return img_path, ann_path


@pytest.fixture
def road_tile():
    return synthetic_road()


@pytest.fixture
def source_tree(tmp_path):
    """Ten annotated source images in a CULane-style flat directory."""
    src = tmp_path / "source"
    for i in range(10):
        img, ann = synthetic_road(seed=i)
        write_culane_pair(src, f"frame_{i:03d}", img, ann)
    return src

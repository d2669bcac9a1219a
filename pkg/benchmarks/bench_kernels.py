"""Benchmark the numba kernel build against the pure-numpy fallback.

Runs each hot kernel on CULane-scale inputs (1640x590) under both paths and
prints a timing table. Usage:

    python benchmarks/bench_kernels.py [--repeats 5]

The same comparison can be forced package-wide with LANEGEN_NO_NUMBA=1.
"""

import argparse
import time

import numpy as np

from lanegen import accel, kernels
from lanegen.imaging import ThresholdPair, canny

H, W = 590, 1640


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    mag = rng.random((H, W))
    qdir = rng.integers(0, 4, (H, W)).astype(np.uint8)
    strong = (rng.random((H, W)) < 0.01).astype(np.uint8)
    weak = ((rng.random((H, W)) < 0.12) | strong.astype(bool)).astype(np.uint8)
    mask = (rng.random((H, W)) < 0.01).astype(np.uint8)
    lanes = np.array(
        [
            [200.0, 589.0, 700.0, 200.0],
            [800.0, 589.0, 820.0, 200.0],
            [1400.0, 589.0, 950.0, 200.0],
            [1600.0, 589.0, 1100.0, 200.0],
        ]
    )
    img = rng.integers(0, 256, (H, W, 3), dtype=np.uint8)
    return mag, qdir, strong, weak, mask, lanes, img


def _time(fn, repeats):
    fn()  # warm-up (includes JIT compilation on the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not accel.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path can run")
        return

    mag, qdir, strong, weak, mask, lanes, img = _inputs()
    cases = {
        "nms_suppress": lambda: kernels.nms_suppress(mag, qdir),
        "hysteresis_connect": lambda: kernels.hysteresis_connect(strong, weak),
        "dilate_disc(r=15)": lambda: kernels.dilate_disc(mask, 15),
        "rasterize(w=30)": lambda: kernels.rasterize_segments(lanes, H, W, 15.0),
        "canny(full)": lambda: canny(img, ThresholdPair()),
    }

    print(f"{'kernel':<22} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, fn in cases.items():
        accel.set_numba_enabled(True)
        jit_t = _time(fn, args.repeats)
        accel.set_numba_enabled(False)
        np_t = _time(fn, args.repeats)
        accel.set_numba_enabled(True)
        print(f"{name:<22} {jit_t * 1e3:>8.1f}ms {np_t * 1e3:>8.1f}ms {np_t / jit_t:>7.1f}x")


if __name__ == "__main__":
    main()

"""Numba availability and kernel-path selection.

Hot raster kernels ship in two flavours: a numba ``@njit`` build and a pure
numpy fallback. Both produce bit-identical output; the numba path is only a
speed-up. Selection order:

1. ``LANEGEN_NO_NUMBA=1`` in the environment forces the numpy fallback.
2. Otherwise the numba build is used whenever numba imports cleanly.

``set_numba_enabled`` exists so tests and the kernel benchmark can exercise
both paths inside one process.
"""

import os

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]) and not kwargs:
            return args[0]
        return wrap


_ENV_DISABLED = os.environ.get("LANEGEN_NO_NUMBA", "") not in ("", "0")
_numba_enabled = NUMBA_AVAILABLE and not _ENV_DISABLED


def using_numba() -> bool:
    """True when dispatchers currently route to the jitted kernels."""
    return _numba_enabled


def set_numba_enabled(enabled: bool) -> bool:
    """Toggle the kernel path at runtime; returns the effective setting."""
    global _numba_enabled
    _numba_enabled = bool(enabled) and NUMBA_AVAILABLE
    return _numba_enabled

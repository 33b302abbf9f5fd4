"""Numba switch.

Hot loops live in :mod:`mirrorcp._kernels` in two flavours: an ``@njit`` loop
version and a vectorized numpy version. Which one is exported is decided once
at import time. Set ``MIRRORCP_DISABLE_NUMBA=1`` to force the numpy path.
"""
import os

_FLAG = "MIRRORCP_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    if not _numba_requested():
        raise ImportError("disabled via " + _FLAG)
    import numba as _numba

    # prefer layers that need no extra runtime; tbb is probed last
    _numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    NUMBA_AVAILABLE = True
except ImportError:
    _numba = None
    NUMBA_AVAILABLE = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise a no-op decorator."""
    if NUMBA_AVAILABLE:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


if NUMBA_AVAILABLE:
    prange = _numba.prange
else:
    prange = range

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"

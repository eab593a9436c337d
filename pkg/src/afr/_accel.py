"""Numba switch.

Kernels in :mod:`afr._kernels` are written twice: an explicit-loop version
compiled with ``numba.njit`` and a vectorized numpy version. Which one the
public API dispatches to is decided once at import time:

* ``AFR_USE_NUMBA=0`` (or ``false``/``no``/``off``) forces the numpy path;
* otherwise numba is used when it can be imported.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

_FALSY = {"0", "false", "no", "off"}

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("AFR_USE_NUMBA", "1").strip().lower() not in _FALSY


def njit(func):
    """``numba.njit`` with the package-wide options, or identity without numba."""
    if numba is None:  # pragma: no cover
        return func
    # no fastmath: results must be reproducible and IEEE-faithful
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

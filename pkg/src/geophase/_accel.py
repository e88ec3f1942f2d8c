"""Switch between numba-compiled kernels and the pure numpy fallback.

Set ``GEOPHASE_NO_NUMBA=1`` before import to force the numpy path.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("GEOPHASE_NO_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is usable, otherwise identity."""
    kwargs.setdefault("cache", True)

    def wrap(fn):
        if numba is None:
            return fn
        return numba.njit(**kwargs)(fn)

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


def pick(compiled, fallback):
    return compiled if USE_NUMBA else fallback

"""Numba switch for the hot kernels.

Set ``DOBBENCH_DISABLE_NUMBA=1`` to run every kernel as plain numpy code.
"""
import os

USE_NUMBA = os.environ.get("DOBBENCH_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:

    def jit(func):
        return _njit(cache=True, nogil=True, fastmath=False)(func)

else:

    def jit(func):
        return func

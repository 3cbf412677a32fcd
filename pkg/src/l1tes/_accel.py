"""Numba switch.

Hot kernels are written once in the numba-compatible subset of numpy and
compiled with ``njit`` unless ``L1TES_DISABLE_NUMBA`` is set to a truthy value
(or numba cannot be imported). The uncompiled function is always reachable
through ``.py_func`` so both paths can be exercised side by side.
"""
import os

_FLAG = "L1TES_DISABLE_NUMBA"

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and os.environ.get(_FLAG, "").lower() not in ("1", "true", "yes", "on")


def maybe_njit(func):
    """Compile ``func`` with numba when enabled, else return it with a ``py_func`` alias."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    func.py_func = func
    return func

"""Backend switch for the hot kernels.

Set ``REFEREE_DISABLE_NUMBA=1`` before import to run the pure-numpy path.
The numba path is used whenever numba imports cleanly and the flag is unset.
"""
import os

_DISABLED = os.environ.get("REFEREE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("disabled by REFEREE_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


BACKEND = "numba" if HAS_NUMBA else "numpy"

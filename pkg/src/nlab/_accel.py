"""
Optional numba acceleration.

Set ``NLAB_NUMBA=0`` in the environment to force the pure-numpy kernels even
when numba is importable. The choice is made once, at import time.
"""
import os

_requested = os.environ.get("NLAB_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _requested:
        raise ImportError("numba disabled by NLAB_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit and @njit(cache=True) both work
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(func):
            return func

        return wrapper


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"

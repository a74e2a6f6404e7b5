"""Numba switch.

Setting ``MOLQSIM_DISABLE_NUMBA=1`` (or running without numba installed)
routes every hot kernel through its pure-numpy twin.
"""
import os

_FLAG = os.environ.get("MOLQSIM_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kws):
    """``numba.njit`` with caching, or identity when numba is unavailable."""
    kws.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kws)


def backend():
    return "numba" if USE_NUMBA else "numpy"

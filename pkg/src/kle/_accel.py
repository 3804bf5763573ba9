"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``KLE_DISABLE_NUMBA=1`` (or ``true``/``yes``) before import to force the
numpy path. If numba is not installed the numpy path is used silently.
"""
import os

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAVE_NUMBA = False

_flag = os.environ.get("KLE_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    bare = len(args) == 1 and callable(args[0])
    if not HAVE_NUMBA:
        return args[0] if bare else (lambda fn: fn)
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if bare:
        return numba.njit(**kwargs)(args[0])
    return numba.njit(*args, **kwargs)

"""Backend selection for the hot kernels.

``BTWIST_BACKEND=numpy`` forces the pure-numpy path; anything else uses numba
when it can be imported.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
BACKEND = os.environ.get("BTWIST_BACKEND", "numba").strip().lower()
USE_NUMBA = HAVE_NUMBA and BACKEND != "numpy"


def njit(fn):
    """Compile ``fn`` with numba, or return it unchanged if numba is absent."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)


def thread_cap():
    """Worker cap from ``BTWIST_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BTWIST_THREADS", "1")))
    except ValueError:
        return 1

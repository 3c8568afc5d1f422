"""Optional numba acceleration.

Set ``SUBGAUSS_NO_NUMBA=1`` (or ``SUBGAUSS_BACKEND=numpy``) before import to
force the pure-numpy kernels. Both paths must produce the same numbers up to
floating-point reassociation, and the test suite runs the kernels both ways.
"""
import os

_disabled = (
    os.environ.get("SUBGAUSS_NO_NUMBA", "0") not in ("", "0")
    or os.environ.get("SUBGAUSS_BACKEND", "").lower() == "numpy"
)

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend():
    return "numba" if HAVE_NUMBA else "numpy"

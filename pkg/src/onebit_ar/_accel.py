"""Numba switch.

Set ``ONEBIT_AR_NUMBA=0`` to force the pure-numpy kernels. When numba is not
importable the numpy path is used regardless of the flag.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None

_flag = os.environ.get("ONEBIT_AR_NUMBA", "1").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` in nopython mode if numba is installed.

    The compiled version is always built when possible so that both paths can
    be benchmarked side by side; which one the package uses is decided by
    ``USE_NUMBA`` in :mod:`onebit_ar.kernels`.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)

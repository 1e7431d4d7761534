"""Kernel backend selection.

The hot numeric kernels (entropy-coded scan assembly, integer inverse DCT)
are written twice: a loop form compiled with numba's @njit and a vectorized
pure-numpy form. Which one runs is chosen once at import time from the
QTOPT_NUMBA environment variable:

    QTOPT_NUMBA=auto   use numba if importable, else numpy   (default)
    QTOPT_NUMBA=1      require numba, raise if missing
    QTOPT_NUMBA=0      force the pure-numpy fallback

Both backends are bit-exact equals; see benchmarks/bench_backends.py for the
speed comparison.
"""

import os

_FLAG = os.environ.get("QTOPT_NUMBA", "auto").strip().lower()


def _load_numba():
    if _FLAG in ("0", "off", "false", "no", "numpy"):
        return None
    try:
        import numba
    except ImportError:
        if _FLAG in ("1", "on", "true", "yes", "numba"):
            raise ImportError(
                "QTOPT_NUMBA=%s requires numba, which is not installed" % _FLAG
            )
        return None
    return numba


_numba = _load_numba()

NUMBA_ENABLED = _numba is not None
BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def njit(*args, **kwargs):
    """numba.njit when the numba backend is active, identity otherwise."""
    if _numba is not None:
        return _numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def wrap(fn):
        return fn

    return wrap

"""Optional numba acceleration.

Hot kernels are decorated with :func:`njit` from this module.  Setting the
environment variable ``RTK5G_DISABLE_NUMBA=1`` before import (or running
without numba installed) turns the decorator into a no-op so the same code
runs as plain Python/numpy.
"""

import os

_flag = os.environ.get("RTK5G_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def python_impl(func):
    """Return the undecorated Python function behind a kernel."""
    return getattr(func, "py_func", func)

"""Optional numba acceleration.

Kernels in :mod:`ptstab.kernels` are decorated with :func:`maybe_njit`.  When
numba is importable and ``PTSTAB_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the undecorated Python functions are
used, which is the pure-numpy fallback path.
"""

import os

_FLAG = os.environ.get("PTSTAB_DISABLE_NUMBA", "0").strip().lower()

try:
    if _FLAG not in ("", "0", "false", "no"):
        raise ImportError("numba disabled by PTSTAB_DISABLE_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def maybe_njit(func=None, **options):
    """``numba.njit`` when enabled, identity otherwise."""
    opts = {"cache": True, "nogil": True}
    opts.update(options)

    def wrap(f):
        if not NUMBA_ENABLED:
            return f
        return _njit(**opts)(f)

    if func is not None:
        return wrap(func)
    return wrap

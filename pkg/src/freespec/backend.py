"""Kernel backend selection.

Two environment variables control the hot path:

* ``FREESPEC_BACKEND``: ``numba`` (default when importable) or ``numpy``
  for the pure-numpy fallback.
* ``FREESPEC_THREADS``: optional cap on numba's thread count; absent means
  the numba default.  Results are identical at any thread count because the
  kernel parallelizes over independent rows.
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_numpy

BACKEND_ENV = "FREESPEC_BACKEND"
THREADS_ENV = "FREESPEC_THREADS"


def _apply_thread_cap() -> None:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return
    import numba

    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _select():
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower() or "auto"
    if choice == "numpy":
        return _kernels_numpy, "numpy"
    if choice not in ("auto", "numba"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {choice!r}")
    try:
        from . import _kernels_numba
    except ImportError:
        if choice == "numba":
            raise
        warnings.warn("numba unavailable; using the pure-numpy attention kernel")
        return _kernels_numpy, "numpy"
    _apply_thread_cap()
    return _kernels_numba, "numba"


_impl, _name = _select()


def backend_name() -> str:
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return _name


def attend_masked(q, k, v, scale, mask):
    return _impl.attend_masked(q, k, v, scale, mask)

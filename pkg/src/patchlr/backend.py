"""Kernel backend selection.

The hot numeric loops (KNN search, per-block SVT, sparse matvec, Siddon ray
tracing, scatter accumulation) exist twice: a numba-jitted implementation in
``kernels_numba`` and a vectorized pure-numpy implementation in
``kernels_numpy``. Both expose the same function surface and contracts.

The active backend is chosen once at import time from the environment
variable ``PATCHLR_BACKEND``:

    PATCHLR_BACKEND=numba   force the jitted kernels (error if numba missing)
    PATCHLR_BACKEND=numpy   force the pure-numpy fallback
    unset / "auto"          numba when importable, numpy otherwise
"""

import os

from .errors import InvalidArgumentError

_CHOICES = ("auto", "numba", "numpy")


def _resolve(flag):
    flag = (flag or "auto").strip().lower() or "auto"
    if flag not in _CHOICES:
        raise InvalidArgumentError(
            f"PATCHLR_BACKEND must be one of {_CHOICES}, got {flag!r}"
        )
    if flag == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
        have_numba = True
    except ImportError:
        have_numba = False
    if flag == "numba":
        if not have_numba:
            raise InvalidArgumentError(
                "PATCHLR_BACKEND=numba requested but numba is not importable"
            )
        return "numba"
    return "numba" if have_numba else "numpy"


ACTIVE = _resolve(os.environ.get("PATCHLR_BACKEND"))

if ACTIVE == "numba":
    from . import kernels_numba as kernels
else:
    from . import kernels_numpy as kernels


def active_backend():
    """Name of the kernel backend selected at import time."""
    return ACTIVE

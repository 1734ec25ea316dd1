"""Backend selection for the hot kernels.

``CORRUPTNET_BACKEND=numpy`` forces the pure-numpy fallback even when numba is
importable; anything else (or unset) uses numba when available.
"""

from __future__ import annotations

import os

ENV_FLAG = "CORRUPTNET_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(ENV_FLAG, "numba").strip().lower() != "numpy"


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def njit(func):
    """Compile ``func`` with numba if importable, else return it untouched."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)

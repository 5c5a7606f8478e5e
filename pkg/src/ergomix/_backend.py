"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the NumPy
fallback is used. ``ERGOMIX_BACKEND=numpy`` or ``=cython`` forces a choice
(the latter raises if the extension was never built). Selection happens once
at import time so a whole process always runs on one backend.
"""

import os

_requested = os.environ.get("ERGOMIX_BACKEND", "auto").lower()
if _requested not in ("auto", "", "cython", "numpy"):
    raise ValueError(
        f"ERGOMIX_BACKEND must be 'auto', 'cython' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from . import _kernels_py as kernels

    BACKEND = "numpy"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]

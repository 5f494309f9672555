"""Select the kernel implementation at import time.

The compiled extension is preferred; set ``GEPGAME_PURE_PYTHON=1`` to force
the NumPy fallback (useful for benchmarking and for checking that both agree).
"""
import os

from . import _fallback

if os.environ.get("GEPGAME_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
game_direction = _impl.game_direction

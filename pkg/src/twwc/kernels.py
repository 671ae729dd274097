"""Hot loops, compiled when the extension is available.

``IMPLEMENTATION`` is ``"cython"`` or ``"python"``. Set the environment
variable ``TWWC_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("TWWC_PURE_PYTHON"):
        raise ImportError("pure-python mode requested")
    from . import _kernels as _impl

    IMPLEMENTATION = "cython"
except ImportError:
    _impl = _kernels_py
    IMPLEMENTATION = "python"

ml_decode = _impl.ml_decode
z_likelihoods = _impl.z_likelihoods

__all__ = ["IMPLEMENTATION", "ml_decode", "z_likelihoods"]

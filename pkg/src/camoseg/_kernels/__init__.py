"""Hot per-pixel kernels with a compiled core and a pure-Python fallback.

The compiled extension (``camoseg._kernels._native``, built from Cython) is
preferred when it imported cleanly; otherwise the NumPy fallback is used.
Set ``CAMOSEG_PURE_PYTHON=1`` to force the fallback, e.g. for benchmarking
or debugging. Both implementations are exact and return identical results.
"""

import importlib
import os

from . import fallback

_native = None
if os.environ.get("CAMOSEG_PURE_PYTHON", "") in ("", "0"):
    try:
        _native = importlib.import_module("camoseg._kernels._native")
    except ImportError:
        _native = None

_impl = _native if _native is not None else fallback

IMPLEMENTATION = "native" if _native is not None else "python"

label_components = _impl.label_components
greedy_spaced = _impl.greedy_spaced


def native_module():
    """The compiled module, or None when it is unavailable."""
    return _native

"""Hot numerical kernels.

The compiled extension ``_kernels`` is preferred; the NumPy module
``_fallback`` is used when the extension is not built or when the
environment variable ``ISOMLAB_PURE_PYTHON`` is set to a non-empty value
other than ``0``.
"""
import os

from . import _fallback

BACKEND = "python"
term_kernel = _fallback.term_kernel

if os.environ.get("ISOMLAB_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _kernels
    except ImportError:  # extension not compiled
        _kernels = None
    if _kernels is not None:
        term_kernel = _kernels.term_kernel
        BACKEND = "compiled"

__all__ = ["BACKEND", "term_kernel"]

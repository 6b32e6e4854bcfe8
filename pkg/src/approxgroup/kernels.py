"""Kernel backend selection.

The compiled extension is used when importable; setting the environment
variable ``APPROXGROUP_PURE=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("APPROXGROUP_PURE", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

utmod_mul = _impl.utmod_mul
utmod_inv = _impl.utmod_inv
utmod_product = _impl.utmod_product
table_product = _impl.table_product
table_ball_sizes = _impl.table_ball_sizes
table_closure = _impl.table_closure

__all__ = [
    "BACKEND",
    "utmod_mul",
    "utmod_inv",
    "utmod_product",
    "table_product",
    "table_ball_sizes",
    "table_closure",
]

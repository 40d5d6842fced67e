"""Zero-run RLE used by the toy codec.

The compiled kernel is preferred; set ``VTESTER_PURE_PYTHON=1`` to force the
pure-Python one. ``BACKEND`` names the kernel in use.
"""

from __future__ import annotations

import os

from . import _rle_py

if os.environ.get("VTESTER_PURE_PYTHON"):
    _impl = _rle_py
    BACKEND = "python"
else:
    try:
        from . import _rle_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _rle_py
        BACKEND = "python"

rle_compress = _impl.rle_compress
rle_decompress = _impl.rle_decompress

__all__ = ["BACKEND", "rle_compress", "rle_decompress"]

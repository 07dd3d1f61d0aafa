"""Selects the water-filling kernel at import time.

Prefers the compiled extension (hetsplit._waterfill) and falls back to the
pure numpy implementation. Set HETSPLIT_PURE=1 to force the fallback, e.g.
for benchmarking or debugging.
"""

import os

from . import _waterfill_py

if os.environ.get("HETSPLIT_PURE") == "1":
    _impl = _waterfill_py
    USING_COMPILED = False
else:
    try:
        from . import _waterfill as _impl  # type: ignore[no-redef]

        USING_COMPILED = True
    except ImportError:
        _impl = _waterfill_py
        USING_COMPILED = False

waterfill = _impl.waterfill

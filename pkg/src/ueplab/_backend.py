"""Pick the kernel implementation once, at import.

Set ``UEPLAB_PURE_PYTHON=1`` to force the pure-Python kernels even when the
compiled extension is available.
"""

import os

if os.environ.get("UEPLAB_PURE_PYTHON", "").strip() not in ("", "0"):
    from ueplab import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from ueplab import _ckernels as kernels
        BACKEND = "compiled"
    except ImportError:
        from ueplab import _pykernels as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]

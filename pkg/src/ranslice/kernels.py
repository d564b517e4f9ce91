"""Kernel backend selection.

The compiled extension is used when importable; ``RANSLICE_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("RANSLICE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

ROUND_ROBIN = _kernels_py.ROUND_ROBIN
MAX_RATE = _kernels_py.MAX_RATE
MIN_RATE = _kernels_py.MIN_RATE

shared_counts = _impl.shared_counts
oracle_search = _impl.oracle_search
window_rb_counts = _impl.window_rb_counts

"""Backend selection for the hot loops.

The compiled Cython module is used when it imports; otherwise, or when the
environment variable ``GSCRANK_KERNELS`` is set to ``python``, the numpy
fallback is used. ``BACKEND`` records the choice.
"""

import os

from . import _pykernels as python_kernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # pragma: no cover - depends on the build
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("GSCRANK_KERNELS", "auto") != "python":
    _impl = compiled_kernels
    BACKEND = "cython"
else:
    _impl = python_kernels
    BACKEND = "python"

block_match = _impl.block_match
aggregate = _impl.aggregate
adaptive_median = _impl.adaptive_median

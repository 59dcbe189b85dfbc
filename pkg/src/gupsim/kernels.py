"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Setting ``GUPSIM_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("GUPSIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

direct_sum = _impl.direct_sum
leapfrog = _impl.leapfrog

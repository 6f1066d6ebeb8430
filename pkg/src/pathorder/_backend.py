"""Select the kernel implementation at import time.

The compiled extension is preferred; set ``PATHORDER_PURE=1`` to force the
pure-Python path (used by the equivalence tests and the benchmark).
"""
import importlib
import os

BACKEND = "python"

if os.environ.get("PATHORDER_PURE", "") not in ("1", "true", "yes"):
    try:
        kernels = importlib.import_module("pathorder._kernels")
        BACKEND = "cython"
    except ImportError:
        kernels = importlib.import_module("pathorder._pykernels")
else:
    kernels = importlib.import_module("pathorder._pykernels")

pykernels = importlib.import_module("pathorder._pykernels")

__all__ = ["BACKEND", "kernels", "pykernels"]

"""Backend selection for the hot loops.

The compiled extension is used when it imports; set
``SPECAUCTION_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("SPECAUCTION_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

greedy_select = _impl.greedy_select
subset_search = _impl.subset_search

__all__ = ["BACKEND", "greedy_select", "subset_search"]

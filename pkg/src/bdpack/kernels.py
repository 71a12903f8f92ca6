"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise (or when
``BDPACK_PURE_PYTHON=1``) the numpy/pure-Python fallback is used.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("BDPACK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _impl = _ckernels
        BACKEND = "cython"

count_differences = _impl.count_differences
dm_search_kernel = _impl.dm_search_kernel


def backends() -> dict[str, object]:
    """All importable backends by name (used by tests and the benchmark)."""
    out: dict[str, object] = {"python": _pykernels}
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out

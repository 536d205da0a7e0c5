"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``HARMRATIO_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the numpy fallback is used. ``BACKEND`` names the choice.
"""
from __future__ import annotations

import os

from harmratio import _kernels_py

_FUNCTIONS = ("floors_argmax", "ihr_pairs", "ghr_sort", "bnb_nash", "bnb_maxmin")


def _load():
    if os.environ.get("HARMRATIO_PURE_PYTHON", "0") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from harmratio import _kernels as compiled
    except ImportError:
        return _kernels_py, "python"
    return compiled, "cython"


_impl, BACKEND = _load()

floors_argmax = _impl.floors_argmax
ihr_pairs = _impl.ihr_pairs
ghr_sort = _impl.ghr_sort
bnb_nash = _impl.bnb_nash
bnb_maxmin = _impl.bnb_maxmin

ratio_matrix = _kernels_py.ratio_matrix
allocation_utilities = _kernels_py.allocation_utilities


def backends():
    """Every importable backend as ``{name: module}``; used by tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from harmratio import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out

"""Batch statistic kernels with a compiled core and a NumPy fallback.

The compiled extension is used when importable; otherwise (or when the
environment variable SIMPAC_KERNELS=python is set) the NumPy reference
implementation takes over.  `BACKEND` records which one is active.
"""

from __future__ import annotations

import os

import numpy as np

from . import _ref
from ._ref import KIND_AD, KIND_BJO, KIND_DW, KIND_EICKER, KIND_KS

if os.environ.get("SIMPAC_KERNELS", "").strip().lower() == "python":
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

STAT_KINDS = {
    "ks": KIND_KS,
    "ad": KIND_AD,
    "eicker": KIND_EICKER,
    "bjo": KIND_BJO,
    "dw": KIND_DW,
}

__all__ = [
    "BACKEND",
    "STAT_KINDS",
    "KIND_KS",
    "KIND_AD",
    "KIND_EICKER",
    "KIND_BJO",
    "KIND_DW",
    "band_statistics",
    "rw_statistics",
]


def band_statistics(u, kind: int, nu: float = 1.5, j_min: int = 0) -> np.ndarray:
    """Sup statistic per row of sorted samples (rows strictly inside (0, 1))."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"expected a 2-d array of sorted rows, got ndim={u.ndim}")
    return np.asarray(_impl.band_statistics(u, int(kind), float(nu), int(j_min)))


def rw_statistics(u, j_idx, k_idx, fn_mass, penalty) -> np.ndarray:
    """Penalized root-KL interval statistic per row of sorted samples."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"expected a 2-d array of sorted rows, got ndim={u.ndim}")
    j_idx = np.ascontiguousarray(j_idx, dtype=np.int64)
    k_idx = np.ascontiguousarray(k_idx, dtype=np.int64)
    fn_mass = np.ascontiguousarray(fn_mass, dtype=np.float64)
    penalty = np.ascontiguousarray(penalty, dtype=np.float64)
    if not (j_idx.shape == k_idx.shape == fn_mass.shape == penalty.shape):
        raise ValueError("interval arrays must share one shape")
    if j_idx.size == 0:
        raise ValueError("interval family is empty")
    if np.any(j_idx < 1) or np.any(k_idx <= j_idx) or np.any(k_idx > u.shape[1]):
        raise ValueError("interval indices must satisfy 1 <= j < k <= n")
    return np.asarray(_impl.rw_statistics(u, j_idx, k_idx, fn_mass, penalty))

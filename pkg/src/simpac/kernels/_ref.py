"""Pure NumPy kernels: batch evaluation of sup-type band statistics.

Semantics are shared with the compiled extension (`_fast`); both operate on
rows of sorted samples and return one statistic value per row.  For a step
empirical CDF against a continuous reference CDF, each sup reduces to
evaluating the integrand at the two candidate pairs per order statistic
(left limit of the previous constancy interval and the interval it opens),
because every supported integrand is nondecreasing in the distance between
the empirical and reference arguments on each side.
"""

from __future__ import annotations

import numpy as np

KIND_KS = 0
KIND_AD = 1
KIND_EICKER = 2
KIND_BJO = 3
KIND_DW = 4


def _kl(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Bernoulli KL divergence K(p, x), elementwise, for x strictly in (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(p > 0.0, p * np.log(p / x), 0.0)
        t2 = np.where(p < 1.0, (1.0 - p) * np.log((1.0 - p) / (1.0 - x)), 0.0)
    return np.maximum(t1 + t2, 0.0)


def _cu(t: np.ndarray, nu: float) -> np.ndarray:
    """Additive correction C(t) + nu D(t) for t strictly inside (0, 1)."""
    s = 2.0 * t - 1.0
    c = np.log1p(-np.log1p(-s * s))
    return c + nu * np.log1p(c * c)


def _side_values(u: np.ndarray, p_idx: np.ndarray, kind: int, nu: float, j_min: int) -> np.ndarray:
    """Candidate values max'ed over one side; -inf rows when nothing is kept."""
    B, m = u.shape
    keep = p_idx >= j_min
    if kind == KIND_EICKER:
        keep = keep & (p_idx > 0) & (p_idx < m)
    if not np.any(keep):
        return np.full(B, -np.inf)
    p = p_idx[keep] / m
    x = u[:, keep]
    if kind == KIND_KS:
        v = np.sqrt(m) * np.abs(p - x)
    elif kind == KIND_AD:
        v = np.sqrt(m) * np.abs(p - x) / np.sqrt(x * (1.0 - x))
    elif kind == KIND_EICKER:
        v = np.sqrt(m) * np.abs(p - x) / np.sqrt(p * (1.0 - p))
    elif kind == KIND_BJO:
        v = m * _kl(p, x)
    elif kind == KIND_DW:
        t = np.clip(0.5, np.minimum(p, x), np.maximum(p, x))
        v = m * _kl(p, x) - _cu(t, nu)
    else:
        raise ValueError(f"unknown statistic kind {kind!r}")
    return v.max(axis=1)


def band_statistics(u: np.ndarray, kind: int, nu: float = 1.5, j_min: int = 0) -> np.ndarray:
    """Statistic per row of `u` ((B, m), each row sorted, values in (0, 1)).

    `j_min` restricts the sup to constancy intervals whose empirical CDF
    index is at least j_min (0 keeps everything).
    """
    B, m = u.shape
    j = np.arange(1, m + 1)
    lo = _side_values(u, j - 1, kind, nu, j_min)  # left limits: Fhat = (j-1)/m at U_(j)
    hi = _side_values(u, j, kind, nu, j_min)      # interval starts: Fhat = j/m at U_(j)
    return np.maximum(lo, hi)


def rw_statistics(
    u: np.ndarray,
    j_idx: np.ndarray,
    k_idx: np.ndarray,
    fn_mass: np.ndarray,
    penalty: np.ndarray,
) -> np.ndarray:
    """Penalized root-KL interval statistic per row of sorted uniforms.

    For each interval (j, k): sqrt(2 n K(true mass, empirical mass)) - penalty,
    with true mass U_(k) - U_(j) and empirical mass fn_mass = (k - j)/n.
    """
    B, n = u.shape
    fi = u[:, k_idx - 1] - u[:, j_idx - 1]
    v = np.sqrt(2.0 * n * _kl(fi, fn_mass)) - penalty
    return v.max(axis=1)

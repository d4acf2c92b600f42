# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: batch evaluation of sup-type band statistics.

Same semantics as the NumPy reference in `_ref`; one statistic value per row
of sorted samples, no temporaries, scalar math from libc.
"""

from libc.math cimport fabs, fmax, fmin, log, log1p, sqrt

import numpy as np

cdef double NEG_INF = -float("inf")

DEF KIND_KS = 0
DEF KIND_AD = 1
DEF KIND_EICKER = 2
DEF KIND_BJO = 3
DEF KIND_DW = 4


cdef inline double _kl(double p, double x) nogil:
    # Bernoulli KL divergence K(p, x) for x strictly inside (0, 1)
    cdef double out = 0.0
    if p > 0.0:
        out += p * log(p / x)
    if p < 1.0:
        out += (1.0 - p) * log((1.0 - p) / (1.0 - x))
    return out if out > 0.0 else 0.0


cdef inline double _cu(double t, double nu) nogil:
    # C(t) + nu D(t) with C = log1p(-log1p(-(2t-1)^2))
    cdef double s = 2.0 * t - 1.0
    cdef double c = log1p(-log1p(-s * s))
    return c + nu * log1p(c * c)


cdef inline double _cand(int kind, double p, double x, double dm, double nu) nogil:
    cdef double t
    if kind == KIND_KS:
        return sqrt(dm) * fabs(p - x)
    if kind == KIND_AD:
        return sqrt(dm) * fabs(p - x) / sqrt(x * (1.0 - x))
    if kind == KIND_EICKER:
        return sqrt(dm) * fabs(p - x) / sqrt(p * (1.0 - p))
    if kind == KIND_BJO:
        return dm * _kl(p, x)
    # KIND_DW: correction evaluated at the interval point closest to 1/2
    t = fmin(fmax(0.5, fmin(p, x)), fmax(p, x))
    return dm * _kl(p, x) - _cu(t, nu)


def band_statistics(const double[:, ::1] u, int kind, double nu=1.5, int j_min=0):
    """Statistic per row of sorted samples; see the `_ref` twin for details."""
    cdef Py_ssize_t B = u.shape[0]
    cdef Py_ssize_t m = u.shape[1]
    if kind < KIND_KS or kind > KIND_DW:
        raise ValueError(f"unknown statistic kind {kind!r}")
    if kind == KIND_BJO or kind == KIND_DW:
        return _kl_statistics(u, kind, nu, j_min)
    out = np.empty(B, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t b, j
    cdef double dm = <double> m
    cdef double best, x, v
    cdef int i
    with nogil:
        for b in range(B):
            best = NEG_INF
            for j in range(1, m + 1):
                x = u[b, j - 1]
                i = <int> (j - 1)
                if i >= j_min and (kind != KIND_EICKER or (0 < i < m)):
                    v = _cand(kind, i / dm, x, dm, nu)
                    if v > best:
                        best = v
                i = <int> j
                if i >= j_min and (kind != KIND_EICKER or i < m):
                    v = _cand(kind, i / dm, x, dm, nu)
                    if v > best:
                        best = v
            o[b] = best
    return out


def _kl_statistics(const double[:, ::1] u, int kind, double nu, int j_min):
    # KL-based kinds, with the logs split by argument so each is taken once:
    # K(p, x) = p (log p - log x) + (1 - p)(log1p(-p) - log1p(-x)), the p
    # pieces precomputed on the i/m grid and the x pieces once per entry.
    cdef Py_ssize_t B = u.shape[0]
    cdef Py_ssize_t m = u.shape[1]
    out = np.empty(B, dtype=np.float64)
    cdef double[::1] o = out
    lp_a = np.empty(m + 1)
    l1p_a = np.empty(m + 1)
    cup_a = np.zeros(m + 1)
    cdef double[::1] lp = lp_a, l1p = l1p_a, cup = cup_a
    cdef Py_ssize_t b, j, i, s
    cdef double dm = <double> m
    cdef double best, x, lx, l1x, p, v, lo, hi, cux
    cdef bint have_cux, dw = kind == KIND_DW
    for i in range(m + 1):
        p = i / dm
        lp[i] = log(p) if i > 0 else 0.0        # i = 0 drops the first term
        l1p[i] = log1p(-p) if i < m else 0.0    # i = m drops the second
        if dw and 0 < i < m:
            cup[i] = _cu(p, nu)                 # endpoints never supply t
    with nogil:
        for b in range(B):
            best = NEG_INF
            for j in range(1, m + 1):
                x = u[b, j - 1]
                lx = log(x)
                l1x = log1p(-x)
                have_cux = False
                cux = 0.0
                for s in range(2):
                    i = j - 1 + s
                    if i < j_min:
                        continue
                    p = i / dm
                    v = 0.0
                    if i > 0:
                        v += p * (lp[i] - lx)
                    if i < m:
                        v += (1.0 - p) * (l1p[i] - l1x)
                    if v < 0.0:
                        v = 0.0
                    v *= dm
                    if dw:
                        if p < x:
                            lo = p
                            hi = x
                        else:
                            lo = x
                            hi = p
                        if lo > 0.5 or hi < 0.5:
                            # closest endpoint to 1/2; equal-endpoint ties pick x
                            if (hi if hi < 0.5 else lo) == x:
                                if not have_cux:
                                    cux = _cu(x, nu)
                                    have_cux = True
                                v -= cux
                            else:
                                v -= cup[i]
                    if v > best:
                        best = v
            o[b] = best
    return out


def rw_statistics(
    const double[:, ::1] u,
    const long long[::1] j_idx,
    const long long[::1] k_idx,
    const double[::1] fn_mass,
    const double[::1] penalty,
):
    """Penalized root-KL interval statistic per row; see the `_ref` twin."""
    cdef Py_ssize_t B = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    cdef Py_ssize_t q = j_idx.shape[0]
    out = np.empty(B, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t b, r
    cdef double best, fi, v
    cdef double dn = <double> n
    with nogil:
        for b in range(B):
            best = NEG_INF
            for r in range(q):
                fi = u[b, k_idx[r] - 1] - u[b, j_idx[r] - 1]
                v = sqrt(2.0 * dn * _kl(fi, fn_mass[r])) - penalty[r]
                if v > best:
                    best = v
            o[b] = best
    return out

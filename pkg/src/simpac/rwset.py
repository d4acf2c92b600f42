"""Interval-family confidence set and its conversion to a CDF band.

Instead of bounding the CDF at each order statistic directly, this method
bounds the probability mass of a family of data-driven intervals
(X_(j), X_(k)] via a penalized root-KL statistic, then propagates those
per-interval bounds to pointwise CDF bounds with a difference-constraint
linear program.  The LP is solved exactly as a shortest-path problem
(Bellman-Ford on the constraint graph), one source, all coordinates at once.

The sparse Rivera-Walther family uses O(n) intervals spread over dyadic
scales; the all-intervals variant uses every pair of distinct order
statistics and is the tighter, slower comparison point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bands import StepBand, as_sorted_scores
from .numerics import kl_bernoulli

__all__ = [
    "IntervalFamily",
    "IntervalBounds",
    "InfeasibleSystemError",
    "distinct_indices",
    "build_family",
    "uniform_family",
    "interval_penalty",
    "rw_statistic",
    "interval_bounds",
    "solve_difference_system",
    "pointwise_band_lp",
    "rw_band",
    "save_rw_sidecar",
]

_BISECT_TOL = 1e-12


class InfeasibleSystemError(Exception):
    """The difference-constraint system admits no solution (negative cycle).

    Cannot occur for bounds produced by interval_bounds (the empirical CDF
    always satisfies them); raising it signals corrupted or foreign input.
    """


# ---------------------------------------------------------------------------
# family construction


@dataclass(frozen=True)
class IntervalFamily:
    """Index pairs (j, k), j < k, naming intervals (X_(j), X_(k)].

    ``level[i]`` records the dyadic scale that produced pair i (0 for the
    all-intervals variant) and ``level_params`` the per-scale (l, m_l, d_l).
    """

    n: int
    all_intervals: bool
    j: np.ndarray
    k: np.ndarray
    level: np.ndarray
    level_params: tuple = ()

    def __post_init__(self):
        j = np.asarray(self.j, dtype=np.int64)
        k = np.asarray(self.k, dtype=np.int64)
        lv = np.asarray(self.level, dtype=np.int64)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "level", lv)
        if not (j.shape == k.shape == lv.shape) or j.ndim != 1:
            raise ValueError("j, k, level must be 1-d arrays of equal length")
        if j.size == 0:
            raise ValueError("interval family is empty")
        if np.any(j < 1) or np.any(k <= j) or np.any(k > self.n - 1):
            raise ValueError("interval indices must satisfy 1 <= j < k <= n - 1")

    def __len__(self) -> int:
        return self.j.size

    def empirical_mass(self) -> np.ndarray:
        return (self.k - self.j) / self.n

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "all_intervals": bool(self.all_intervals),
            "levels": [
                {"l": int(l), "m_l": float(m_l), "d_l": int(d_l)} for (l, m_l, d_l) in self.level_params
            ],
            "intervals": [[int(a), int(b), int(c)] for a, b, c in zip(self.j, self.k, self.level)],
        }


def distinct_indices(sorted_values) -> np.ndarray:
    """Indices i in 1..n-1 (1-based) where X_(i) != X_(i+1)."""
    s = np.asarray(sorted_values, dtype=np.float64)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need at least two sorted values")
    return np.nonzero(s[:-1] != s[1:])[0].astype(np.int64) + 1


def _family_from_indices(n: int, d_set: np.ndarray, all_intervals: bool) -> IntervalFamily:
    if all_intervals:
        if d_set.size < 2:
            raise ValueError("interval family is empty: fewer than two distinct breakpoints")
        a, b = np.triu_indices(d_set.size, k=1)
        return IntervalFamily(
            n=n,
            all_intervals=True,
            j=d_set[a],
            k=d_set[b],
            level=np.zeros(a.size, dtype=np.int64),
        )

    l_max = math.floor(math.log2(n / math.log(n))) if n > 1 else 0
    if l_max < 2:
        raise ValueError(f"interval family is empty: n={n} gives l_max={l_max} < 2")
    js, ks, lvls, params = [], [], [], []
    for l in range(2, l_max + 1):
        m_l = n * 2.0 ** (-l)
        d_l = math.ceil(m_l / (6.0 * math.sqrt(l)))
        grid = np.intersect1d(np.arange(1, n, d_l, dtype=np.int64), d_set)
        params.append((l, m_l, d_l))
        if grid.size < 2:
            continue  # tie-heavy data can empty a scale; skip it
        # strict window m_l < k - j < 2 m_l via two searchsorted sweeps
        lo = np.searchsorted(grid, grid + m_l, side="right")
        hi = np.searchsorted(grid, grid + 2.0 * m_l, side="left")
        counts = np.maximum(hi - lo, 0)
        if counts.sum() == 0:
            continue
        left = np.repeat(np.arange(grid.size), counts)
        right = np.concatenate([np.arange(a, b) for a, b in zip(lo, hi) if b > a])
        js.append(grid[left])
        ks.append(grid[right])
        lvls.append(np.full(left.size, l, dtype=np.int64))
    if not js:
        raise ValueError("interval family is empty: no scale produced an interval")
    j = np.concatenate(js)
    k = np.concatenate(ks)
    lv = np.concatenate(lvls)
    # dedupe (scales have disjoint width windows, but keep the guarantee explicit)
    key = j * np.int64(n + 1) + k
    _, first = np.unique(key, return_index=True)
    first.sort()
    return IntervalFamily(
        n=n,
        all_intervals=False,
        j=j[first],
        k=k[first],
        level=lv[first],
        level_params=tuple(params),
    )


def build_family(scores, all_intervals: bool = False) -> IntervalFamily:
    """Interval family over the order statistics of the given scores.

    Breakpoint candidates are the tie-free indices; the sparse family then
    thins them on a per-scale grid of spacing d_l and keeps pairs whose index
    gap lies strictly between m_l and 2 m_l.
    """
    s = as_sorted_scores(scores)
    if s.size < 2:
        raise ValueError("interval family is empty: need at least two scores")
    return _family_from_indices(s.size, distinct_indices(s), all_intervals)


def uniform_family(n: int, mode: str = "sparse") -> IntervalFamily:
    """Family for an all-distinct sample of size n (calibration use)."""
    if mode not in ("sparse", "all"):
        raise ValueError(f"mode must be 'sparse' or 'all', got {mode!r}")
    if n < 2:
        raise ValueError("interval family is empty: need n >= 2")
    return _family_from_indices(n, np.arange(1, n, dtype=np.int64), mode == "all")


# ---------------------------------------------------------------------------
# statistic and per-interval inversion


def interval_penalty(t):
    """Penalty 2 log(e / (t (1 - t))) for empirical interval mass t in (0, 1)."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        raise ValueError("interval mass must lie strictly inside (0, 1)")
    out = 2.0 * (1.0 - np.log(t) - np.log1p(-t))
    return float(out) if out.ndim == 0 else out


def rw_statistic(uniforms, family: IntervalFamily) -> float:
    """Penalized root-KL sup statistic of one sorted sample over the family.

    Family construction keeps every empirical mass (k - j)/n strictly inside
    (0, 1), so the penalty is always finite; degenerate masses would have an
    infinite penalty and can never attain the max anyway.
    """
    u = np.asarray(uniforms, dtype=np.float64)
    if u.ndim != 1 or u.size != family.n:
        raise ValueError(f"sample size {u.shape} does not match family n={family.n}")
    if np.any(np.diff(u) < 0):
        raise ValueError("sample must be sorted ascending")
    fn = family.empirical_mass()
    penalty = np.sqrt(interval_penalty(fn))
    return float(kernels.rw_statistics(u[None, :], family.j, family.k, fn, penalty)[0])


def _mass_bounds(fn: float, n: int, kappa: float) -> tuple[float, float]:
    """Invert K(h, fn) <= ((kappa + sqrt(penalty))_+)^2 / (2n) in h, outward."""
    budget = kappa + math.sqrt(interval_penalty(fn))
    if budget <= 0.0:
        return fn, fn
    c = budget * budget / (2.0 * n)
    if kl_bernoulli(0.0, fn) <= c:
        lo = 0.0
    else:
        a, b = 0.0, fn
        while b - a > _BISECT_TOL:
            mid = 0.5 * (a + b)
            if kl_bernoulli(mid, fn) <= c:
                b = mid
            else:
                a = mid
        lo = a
    if kl_bernoulli(1.0, fn) <= c:
        up = 1.0
    else:
        a, b = fn, 1.0
        while b - a > _BISECT_TOL:
            mid = 0.5 * (a + b)
            if kl_bernoulli(mid, fn) <= c:
                a = mid
            else:
                b = mid
        up = b
    return lo, up


@dataclass(frozen=True)
class IntervalBounds:
    """Per-interval bounds: lower[i] <= F(X_(k_i)) - F(X_(j_i)) <= upper[i]."""

    family: IntervalFamily
    kappa: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        up = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if lo.shape != (len(self.family),) or up.shape != lo.shape:
            raise ValueError("bounds must have one (lower, upper) pair per interval")
        fn = self.family.empirical_mass()
        if np.any(lo < 0.0) or np.any(up > 1.0) or np.any(lo > fn + 1e-12) or np.any(up < fn - 1e-12):
            raise ValueError("bounds must satisfy 0 <= lower <= empirical mass <= upper <= 1")


def interval_bounds(scores, family: IntervalFamily, kappa: float) -> IntervalBounds:
    """Invert the statistic's defining inequality into per-interval mass bounds.

    Equal index gaps share one inversion (the bound depends on the interval
    only through its empirical mass).
    """
    s = as_sorted_scores(scores)
    if s.size != family.n:
        raise ValueError(f"score count {s.size} does not match family n={family.n}")
    n = family.n
    gaps = (family.k - family.j).astype(np.int64)
    uniq, inverse = np.unique(gaps, return_inverse=True)
    lo_u = np.empty(uniq.size)
    up_u = np.empty(uniq.size)
    for i, g in enumerate(uniq):
        lo_u[i], up_u[i] = _mass_bounds(g / n, n, kappa)
    return IntervalBounds(family=family, kappa=float(kappa), lower=lo_u[inverse], upper=up_u[inverse])


# ---------------------------------------------------------------------------
# difference-constraint shortest paths


def _ground_distances(n: int, src: np.ndarray, dst: np.ndarray, w: np.ndarray, reverse: bool) -> np.ndarray:
    """Shortest distances from a ground node in the constraint graph.

    Node 0 is ground (value pinned to 0), nodes 1..n the coordinates.  Each
    sweep relaxes every edge once: the box edges through ground, the interval
    difference edges, and the monotonicity chain (the chain is relaxed to a
    fixed point per sweep via a running minimum, which is why convergence
    takes few sweeps).  A feasible system is stable after at most n sweeps;
    instability past that proves a negative cycle.
    """
    dist = np.full(n + 1, np.inf)
    dist[0] = 0.0
    box_in = 0.0 if reverse else 1.0  # ground -> coordinate edge weight
    box_out = 1.0 if reverse else 0.0  # coordinate -> ground edge weight
    for _ in range(n + 3):
        prev = dist.copy()
        np.minimum(dist[1:], dist[0] + box_in, out=dist[1:])
        np.minimum.at(dist, dst, dist[src] + w)
        if reverse:
            np.minimum.accumulate(dist[1:], out=dist[1:])
        else:
            dist[1:] = np.minimum.accumulate(dist[:0:-1])[::-1]
        dist[0] = min(dist[0], float(np.min(dist[1:])) + box_out)
        if np.array_equal(prev, dist):
            return dist
    raise InfeasibleSystemError("difference-constraint system has a negative cycle")


def solve_difference_system(n: int, j_idx, k_idx, lower, upper) -> tuple[np.ndarray, np.ndarray]:
    """Tightest per-coordinate bounds for 0 <= L_1 <= ... <= L_n <= 1 subject
    to lower[i] <= L_{k_i} - L_{j_i} <= upper[i].

    Returns (coordinate_lower, coordinate_upper), each of length n.  The
    monotonicity chain and the [0, 1] box are always part of the system.
    Raises InfeasibleSystemError when the constraints contradict each other.
    """
    j_idx = np.asarray(j_idx, dtype=np.int64)
    k_idx = np.asarray(k_idx, dtype=np.int64)
    lo = np.asarray(lower, dtype=np.float64)
    up = np.asarray(upper, dtype=np.float64)
    if not (j_idx.shape == k_idx.shape == lo.shape == up.shape) or j_idx.ndim != 1:
        raise ValueError("j_idx, k_idx, lower, upper must be 1-d arrays of equal length")
    if j_idx.size and (np.any(j_idx < 1) or np.any(k_idx > n) or np.any(j_idx >= k_idx)):
        raise ValueError("constraint indices must satisfy 1 <= j < k <= n")
    if np.any(np.isnan(lo)) or np.any(np.isnan(up)) or np.any(lo > up):
        raise ValueError("constraint bounds must be NaN-free with lower <= upper")
    # edge u -> v with weight w encodes L_v <= L_u + w
    src = np.concatenate([j_idx, k_idx])
    dst = np.concatenate([k_idx, j_idx])
    w = np.concatenate([up, -lo])
    d_fwd = _ground_distances(n, src, dst, w, reverse=False)
    d_rev = _ground_distances(n, dst, src, w, reverse=True)
    coord_upper = np.minimum(d_fwd[1:], 1.0)
    coord_lower = np.maximum(-d_rev[1:], 0.0)
    return coord_lower, coord_upper


def pointwise_band_lp(bounds: IntervalBounds, n: int | None = None, side: str = "both"):
    """Per-order-statistic CDF bounds implied by the interval bounds.

    ``side`` selects 'lower', 'upper' or 'both' (a tuple).  The bounds are
    simultaneously tight: each is attained by a feasible CDF vector.
    """
    if n is None:
        n = bounds.family.n
    elif n != bounds.family.n:
        raise ValueError(f"n={n} does not match family n={bounds.family.n}")
    lo, up = solve_difference_system(n, bounds.family.j, bounds.family.k, bounds.lower, bounds.upper)
    if side == "lower":
        return lo
    if side == "upper":
        return up
    if side == "both":
        return lo, up
    raise ValueError(f"side must be 'lower', 'upper' or 'both', got {side!r}")


# ---------------------------------------------------------------------------
# band assembly


def rw_band(scores, delta: float, kappa: float, all_intervals: bool = False) -> StepBand:
    """Step band over the scores from the interval-family confidence set.

    On the interval [X_(i), X_(i+1)) the CDF is at least its value at X_(i)
    and at most its value just below X_(i+1), so the step band uses the LP
    lower bound at i and the LP upper bound at i + 1.
    """
    s = as_sorted_scores(scores)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    fam = build_family(s, all_intervals=all_intervals)
    bnds = interval_bounds(s, fam, kappa)
    lo, up = pointwise_band_lp(bnds)
    n = s.size
    lower = np.zeros(n + 1)
    upper = np.ones(n + 1)
    lower[1:] = lo
    upper[:n] = up
    return StepBand(
        method="rw",
        m=n,
        delta=float(delta),
        breakpoints=s,
        lower=lower,
        upper=upper,
        kappa=float(kappa),
    )


def save_rw_sidecar(bounds: IntervalBounds, path) -> None:
    """Audit record: the interval family plus its per-interval bounds."""
    doc = bounds.family.to_dict()
    doc["kappa"] = float(bounds.kappa)
    doc["interval_lower"] = [float(v) for v in bounds.lower]
    doc["interval_upper"] = [float(v) for v in bounds.upper]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")

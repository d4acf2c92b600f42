"""Finite-sample confidence bands for the calibration-score CDF.

A band is a step function over the sorted calibration scores: on the interval
between consecutive order statistics it gives a constant (lower, upper) pair
that contains the unknown score CDF everywhere, simultaneously, with
probability at least 1 - delta.  Thresholding the lower envelope at 1 - alpha
is what turns a band into a whole curve of prediction-set cutoffs, so the
entire downstream guarantee rests on the constructions in this module.

Band constructions:

- ``dkw_band``: closed-form band from the sharp-constant
  Dvoretzky-Kiefer-Wolfowitz inequality (two-sided or lower-only).
- ``dw_band``: inversion of the Duembgen-Wellner adjusted-KL statistic; its
  critical value comes from ``mc_quantile`` (the statistic is distribution
  free for continuous scores, so sorted uniforms calibrate it exactly).
- ``comparison_band``: Berk-Jones-Owen, Anderson-Darling-weighted and
  Eicker-weighted Kolmogorov-Smirnov bands, used as comparison points.

The Rivera-Walther interval-family band lives in ``rwset`` (its geometry is
different); its critical value is still calibrated here via ``mc_quantile``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .numerics import dw_correction_min, kl_bernoulli

__all__ = [
    "StepBand",
    "QuantileTable",
    "ecdf",
    "dkw_band",
    "dw_band",
    "comparison_band",
    "band_statistic",
    "dw_statistic",
    "dw_statistic_discrete",
    "mc_quantile",
    "quantile_table",
    "simulate_statistics",
    "save_band",
    "load_band",
    "save_quantile_table",
    "load_quantile_table",
]

_BISECT_TOL = 1e-12  # inner tolerance; outward rounding keeps reported bounds conservative

_MC_STATISTICS = ("ks", "ad", "eicker", "bjo", "dw", "rw")


# ---------------------------------------------------------------------------
# band container


@dataclass(frozen=True)
class StepBand:
    """Step confidence band over sorted scores.

    ``lower[j]``/``upper[j]`` bound the score CDF on the half-open interval
    [breakpoints[j-1], breakpoints[j]) (with the obvious unbounded pieces at
    j = 0 and j = m).  ``lower[0] = 0`` and ``upper[m] = 1`` always, so the
    band says nothing about regions the data cannot speak to.
    """

    method: str
    m: int
    delta: float
    breakpoints: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    nu: float | None = None
    kappa: float | None = None
    restriction: tuple[float, float] | None = None
    sided: str = "two-sided"

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        up = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if self.m < 1 or bp.shape != (self.m,):
            raise ValueError(f"need m >= 1 breakpoints, got m={self.m}, shape={bp.shape}")
        if lo.shape != (self.m + 1,) or up.shape != (self.m + 1,):
            raise ValueError("lower/upper must have length m + 1")
        if np.isnan(bp).any():
            raise ValueError("breakpoints must not contain NaN")
        if np.any(np.diff(bp) < 0):
            raise ValueError("breakpoints must be sorted ascending")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if lo[0] != 0.0 or up[-1] != 1.0:
            raise ValueError("band must be trivial outside the data: lower[0]=0, upper[m]=1")
        if np.any(lo < 0.0) or np.any(up > 1.0) or np.any(lo > up):
            raise ValueError("band values must satisfy 0 <= lower <= upper <= 1")
        if np.any(np.diff(lo) < 0.0) or np.any(np.diff(up) < 0.0):
            raise ValueError("band envelopes must be nondecreasing")
        if self.restriction is not None:
            a0, a1 = self.restriction
            if not (0.0 <= a0 < a1 <= 1.0):
                raise ValueError(f"restriction must be an interval inside [0, 1], got {self.restriction!r}")
        if self.sided not in ("two-sided", "lower-only"):
            raise ValueError(f"sided must be 'two-sided' or 'lower-only', got {self.sided!r}")

    def bounds_at(self, t):
        """(lower, upper) of the band at score value(s) t."""
        t = np.asarray(t, dtype=np.float64)
        j = np.searchsorted(self.breakpoints, t, side="right")
        return self.lower[j], self.upper[j]

    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "m": int(self.m),
            "delta": float(self.delta),
            "nu": None if self.nu is None else float(self.nu),
            "kappa": None if self.kappa is None else float(self.kappa),
            "restriction": None if self.restriction is None else [float(a) for a in self.restriction],
            "sided": self.sided,
            "breakpoints": [_enc_float(v) for v in self.breakpoints],
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StepBand":
        return cls(
            method=d["method"],
            m=int(d["m"]),
            delta=float(d["delta"]),
            breakpoints=np.array([_dec_float(v) for v in d["breakpoints"]], dtype=np.float64),
            lower=np.array(d["lower"], dtype=np.float64),
            upper=np.array(d["upper"], dtype=np.float64),
            nu=None if d.get("nu") is None else float(d["nu"]),
            kappa=None if d.get("kappa") is None else float(d["kappa"]),
            restriction=None if d.get("restriction") is None else tuple(float(a) for a in d["restriction"]),
            sided=d.get("sided", "two-sided"),
        )


def _enc_float(v) -> float | str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dec_float(v) -> float:
    return float(v)


def save_band(band: StepBand, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(band.to_dict(), fh, indent=1)
        fh.write("\n")


def load_band(path) -> StepBand:
    with open(path, "r", encoding="utf-8") as fh:
        return StepBand.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# score handling and the empirical CDF


def as_sorted_scores(scores) -> np.ndarray:
    """Sorted score values from a ScoreSet or any array-like."""
    values = getattr(scores, "sorted_values", None)
    if values is None:
        values = np.sort(np.asarray(scores, dtype=np.float64))
    else:
        values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("scores must be a nonempty 1-d collection")
    if np.isnan(values).any():
        raise ValueError("scores must not contain NaN")
    return values


def ecdf(scores):
    """Right-continuous empirical CDF evaluator for the given scores.

    Ties are handled by jump size: the returned function steps by the tie
    multiplicity at a repeated value.
    """
    s = as_sorted_scores(scores)
    m = s.size

    def evaluate(t):
        t = np.asarray(t, dtype=np.float64)
        out = np.searchsorted(s, t, side="right") / m
        return float(out) if out.ndim == 0 else out

    return evaluate


# ---------------------------------------------------------------------------
# restriction handling


def _restriction_j_min(m: int, restriction) -> int:
    """Smallest ECDF index j with j/m >= 1 - alpha_max (0 when unrestricted)."""
    if restriction is None:
        return 0
    a0, a1 = float(restriction[0]), float(restriction[1])
    if not (0.0 <= a0 < a1 <= 1.0):
        raise ValueError(f"restriction must be an interval inside [0, 1], got {restriction!r}")
    j = math.ceil(m * (1.0 - a1) - 1e-9)
    return max(j, 0)


# ---------------------------------------------------------------------------
# statistics (single sample and batch simulation)


def band_statistic(uniforms, statistic: str, nu: float = 1.5, restriction=None) -> float:
    """Sup statistic of one sorted sample against the uniform CDF."""
    if statistic not in kernels.STAT_KINDS:
        raise ValueError(f"statistic must be one of {sorted(kernels.STAT_KINDS)}, got {statistic!r}")
    u = np.asarray(uniforms, dtype=np.float64)
    if u.ndim != 1 or u.size < 1:
        raise ValueError("need a nonempty 1-d sample")
    if np.any(np.diff(u) < 0):
        raise ValueError("sample must be sorted ascending")
    if not (u[0] > 0.0 and u[-1] < 1.0):
        raise ValueError("sample values must lie strictly inside (0, 1)")
    j_min = _restriction_j_min(u.size, restriction)
    return float(kernels.band_statistics(u[None, :], kernels.STAT_KINDS[statistic], nu, j_min)[0])


def dw_statistic(uniforms, nu: float = 1.5, restriction=None) -> float:
    """Duembgen-Wellner adjusted-KL sup statistic of one sorted sample."""
    return band_statistic(uniforms, "dw", nu=nu, restriction=restriction)


def dw_statistic_discrete(atom_probs, counts, nu: float = 1.5) -> float:
    """The same statistic for a sample from a finite discrete distribution.

    ``atom_probs`` are the atom masses (summing to 1) in atom order and
    ``counts`` the observed multiplicities.  Both CDFs are constant between
    atoms, so the sup is a maximum over atoms; degenerate pairs (both CDFs
    at 0 or both at 1) contribute nothing.
    """
    p = np.asarray(atom_probs, dtype=np.float64)
    c = np.asarray(counts, dtype=np.float64)
    if p.shape != c.shape or p.ndim != 1 or p.size < 1:
        raise ValueError("atom_probs and counts must be 1-d of equal length")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("atom_probs must be a probability vector")
    if np.any(c < 0) or c.sum() < 1:
        raise ValueError("counts must be nonnegative with a positive total")
    m = c.sum()
    g_true = np.cumsum(p)
    g_hat = np.cumsum(c) / m
    best = -math.inf
    for gh, gt in zip(g_hat, g_true):
        gh = min(max(gh, 0.0), 1.0)
        gt = min(max(gt, 0.0), 1.0)
        pen = dw_correction_min(gh, gt, nu)
        if math.isinf(pen):
            continue
        best = max(best, m * kl_bernoulli(gh, gt) - pen)
    return best


def simulate_statistics(
    statistic: str,
    m: int,
    *,
    nu: float = 1.5,
    restriction=None,
    reps: int = 100_000,
    seed: int,
    rw_family: str = "sparse",
) -> np.ndarray:
    """Monte Carlo draws of a statistic under sorted standard uniforms.

    Replication r draws its uniforms from a dedicated Philox stream keyed by
    (seed, r), so results are independent of chunking or execution order.
    """
    if statistic not in _MC_STATISTICS:
        raise ValueError(f"statistic must be one of {_MC_STATISTICS}, got {statistic!r}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if reps < 1000:
        warnings.warn(f"reps={reps} is below 1000; quantile estimates will be crude", stacklevel=2)

    if statistic == "rw":
        if restriction is not None:
            raise ValueError("restriction is not defined for the interval-family statistic")
        from . import rwset  # local import: rwset also consumes mc_quantile

        fam = rwset.uniform_family(m, mode=rw_family)
        fn = (fam.k - fam.j) / m
        penalty = np.sqrt(rwset.interval_penalty(fn))
        kind = None
        j_min = 0
    else:
        kind = kernels.STAT_KINDS[statistic]
        j_min = _restriction_j_min(m, restriction)

    out = np.empty(reps, dtype=np.float64)
    chunk = max(1, (1 << 22) // m)
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        rows = np.empty((stop - start, m), dtype=np.float64)
        for i in range(start, stop):
            gen = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
            )
            rows[i - start] = gen.random(m)
        rows.sort(axis=1)
        if statistic == "rw":
            out[start:stop] = kernels.rw_statistics(rows, fam.j, fam.k, fn, penalty)
        else:
            out[start:stop] = kernels.band_statistics(rows, kind, nu, j_min)
    return out


def _conservative_index(reps: int, delta: float) -> int:
    """1-based order-statistic index ceil(reps (1 - delta)), clamped to [1, reps]."""
    k = math.ceil(reps * (1.0 - delta) - 1e-9)
    return min(max(k, 1), reps)


def mc_quantile(
    statistic: str,
    m: int,
    delta: float,
    *,
    nu: float = 1.5,
    restriction=None,
    reps: int = 100_000,
    seed: int,
    rw_family: str = "sparse",
) -> float:
    """Conservative Monte Carlo (1 - delta) critical value of a statistic.

    Returns the ceil(reps (1 - delta))-th order statistic of the simulated
    values, which rounds the quantile estimate upward.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    vals = simulate_statistics(
        statistic, m, nu=nu, restriction=restriction, reps=reps, seed=seed, rw_family=rw_family
    )
    vals.sort()
    return float(vals[_conservative_index(reps, delta) - 1])


@dataclass(frozen=True)
class QuantileTable:
    """Critical values of one statistic for several delta levels.

    All entries come from a single simulation run (one sort, several order
    statistics), which makes kappa automatically nonincreasing in delta.
    """

    statistic: str
    m: int
    reps: int
    seed: int
    entries: dict = field(default_factory=dict)  # delta -> kappa
    nu: float | None = None
    restriction: tuple[float, float] | None = None
    family_mode: str | None = None

    def kappa(self, delta: float) -> float:
        key = float(delta)
        if key not in self.entries:
            raise KeyError(f"no entry for delta={delta!r}; available: {sorted(self.entries)}")
        return self.entries[key]

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "m": int(self.m),
            "reps": int(self.reps),
            "seed": int(self.seed),
            "nu": None if self.nu is None else float(self.nu),
            "restriction": None if self.restriction is None else [float(a) for a in self.restriction],
            "family_mode": self.family_mode,
            "entries": {repr(float(d)): float(k) for d, k in sorted(self.entries.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileTable":
        return cls(
            statistic=d["statistic"],
            m=int(d["m"]),
            reps=int(d["reps"]),
            seed=int(d["seed"]),
            entries={float(k): float(v) for k, v in d["entries"].items()},
            nu=None if d.get("nu") is None else float(d["nu"]),
            restriction=None if d.get("restriction") is None else tuple(float(a) for a in d["restriction"]),
            family_mode=d.get("family_mode"),
        )


def quantile_table(
    statistic: str,
    m: int,
    deltas,
    *,
    nu: float = 1.5,
    restriction=None,
    reps: int = 100_000,
    seed: int,
    rw_family: str = "sparse",
) -> QuantileTable:
    """Build a QuantileTable for several deltas from one simulation run."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("need at least one delta")
    for d in deltas:
        if not (0.0 < d < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {d!r}")
    vals = simulate_statistics(
        statistic, m, nu=nu, restriction=restriction, reps=reps, seed=seed, rw_family=rw_family
    )
    vals.sort()
    entries = {d: float(vals[_conservative_index(reps, d) - 1]) for d in deltas}
    return QuantileTable(
        statistic=statistic,
        m=m,
        reps=reps,
        seed=seed,
        entries=entries,
        nu=nu if statistic == "dw" else None,
        restriction=None if restriction is None else (float(restriction[0]), float(restriction[1])),
        family_mode=rw_family if statistic == "rw" else None,
    )


def save_quantile_table(table: QuantileTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.to_dict(), fh, indent=1)
        fh.write("\n")


def load_quantile_table(path) -> QuantileTable:
    with open(path, "r", encoding="utf-8") as fh:
        return QuantileTable.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# band constructions


def dkw_band(scores, delta: float, sided: str = "two-sided") -> StepBand:
    """Closed-form DKW band: ECDF +/- sqrt(log(2/delta) / (2m)), clipped.

    The lower-only variant uses log(1/delta) and leaves the upper envelope
    trivial.  The sharp constant requires delta < 1/2, which is enforced.
    """
    s = as_sorted_scores(scores)
    m = s.size
    if not (0.0 < delta < 0.5):
        raise ValueError(f"delta must lie in (0, 1/2) for the sharp constant, got {delta!r}")
    grid = np.arange(m + 1, dtype=np.float64) / m
    if sided == "two-sided":
        eps = math.sqrt(math.log(2.0 / delta) / (2.0 * m))
        lower = np.clip(grid - eps, 0.0, 1.0)
        upper = np.clip(grid + eps, 0.0, 1.0)
    elif sided == "lower-only":
        eps = math.sqrt(math.log(1.0 / delta) / (2.0 * m))
        lower = np.clip(grid - eps, 0.0, 1.0)
        upper = np.ones(m + 1)
    else:
        raise ValueError(f"sided must be 'two-sided' or 'lower-only', got {sided!r}")
    lower[0] = 0.0
    upper[m] = 1.0
    return StepBand(
        method="dkw", m=m, delta=float(delta), breakpoints=s, lower=lower, upper=upper, sided=sided
    )


def _upper_inverse(p: float, m: int, kappa: float, nu: float | None) -> float:
    """Largest u in (p, 1] with m K(p, u) - correction <= kappa (+1e-12, outward)."""
    lo, hi = p, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        g = m * kl_bernoulli(p, mid)
        if nu is not None:
            g -= dw_correction_min(p, mid, nu)
        if g <= kappa:
            lo = mid
        else:
            hi = mid
    return hi


def _lower_inverse(p: float, m: int, kappa: float, nu: float | None) -> float:
    """Smallest v in [0, p) with m K(p, v) - correction <= kappa (-1e-12, outward)."""
    if p <= 0.0:
        return 0.0
    lo, hi = 0.0, p
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        g = m * kl_bernoulli(p, mid)
        if nu is not None:
            g -= dw_correction_min(p, mid, nu)
        if g <= kappa:
            hi = mid
        else:
            lo = mid
    return lo


def _monotonize(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tighten envelopes using monotonicity of the CDF (validity preserving)."""
    lower = np.maximum.accumulate(lower)
    upper = np.minimum.accumulate(upper[::-1])[::-1]
    return lower, upper


def dw_band(scores, delta: float, kappa: float, nu: float = 1.5, restriction=None) -> StepBand:
    """Duembgen-Wellner band by bisection inversion of the adjusted-KL statistic.

    ``kappa`` is the Monte Carlo critical value (``mc_quantile`` with the
    matching m, nu, restriction and delta).  Unrestricted bands use the exact
    symmetry lower[m-j] = 1 - upper[j]; restricted bands invert both sides
    directly on the covered indices and stay trivial elsewhere.
    """
    s = as_sorted_scores(scores)
    m = s.size
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if not kappa >= 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa!r}")
    if not nu > 0.75:
        raise ValueError(f"nu must exceed 3/4, got {nu!r}")
    upper = np.ones(m + 1)
    lower = np.zeros(m + 1)
    if restriction is None:
        for j in range(m):
            upper[j] = _upper_inverse(j / m, m, kappa, nu)
        lower[1:] = 1.0 - upper[m - 1 :: -1]
        rest = None
    else:
        j_min = _restriction_j_min(m, restriction)
        for j in range(j_min, m):
            upper[j] = _upper_inverse(j / m, m, kappa, nu)
        for j in range(max(j_min, 1), m + 1):
            lower[j] = _lower_inverse(j / m, m, kappa, nu)
        lower, upper = _monotonize(lower, upper)
        rest = (float(restriction[0]), float(restriction[1]))
    return StepBand(
        method="dw",
        m=m,
        delta=float(delta),
        breakpoints=s,
        lower=lower,
        upper=upper,
        nu=float(nu),
        kappa=float(kappa),
        restriction=rest,
    )


def comparison_band(scores, delta: float, kind: str, kappa: float) -> StepBand:
    """Berk-Jones-Owen ('bjo'), Anderson-Darling-weighted ('ad') or
    Eicker-weighted ('eicker') KS band from a Monte Carlo critical value.

    The weighted-KS bands have closed-form inversions; BJO is inverted by
    bisection.  Eicker leaves the extreme intervals unconstrained, so its raw
    inversion is monotonized (a validity-preserving tightening).
    """
    s = as_sorted_scores(scores)
    m = s.size
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if not kappa >= 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa!r}")
    grid = np.arange(m + 1, dtype=np.float64) / m
    if kind == "bjo":
        upper = np.ones(m + 1)
        lower = np.zeros(m + 1)
        for j in range(m):
            upper[j] = _upper_inverse(j / m, m, kappa, None)
        for j in range(1, m + 1):
            lower[j] = _lower_inverse(j / m, m, kappa, None)
    elif kind == "ad":
        # m (p - F)^2 <= kappa^2 F (1 - F), solved as a quadratic in F
        k2 = kappa * kappa
        a = m + k2
        b = 2.0 * grid * m + k2
        disc = np.sqrt(k2 * (4.0 * m * grid * (1.0 - grid) + k2))
        upper = np.clip((b + disc) / (2.0 * a), 0.0, 1.0)
        lower = np.clip((b - disc) / (2.0 * a), 0.0, 1.0)
    elif kind == "eicker":
        half = kappa * np.sqrt(grid * (1.0 - grid) / m)
        lower = np.clip(grid - half, 0.0, 1.0)
        upper = np.clip(grid + half, 0.0, 1.0)
        # the statistic never looks at the extreme intervals
        lower[0] = lower[m] = 0.0
        upper[0] = upper[m] = 1.0
        lower, upper = _monotonize(lower, upper)
    else:
        raise ValueError(f"kind must be 'bjo', 'ad' or 'eicker', got {kind!r}")
    lower[0] = 0.0
    upper[m] = 1.0
    return StepBand(
        method=kind,
        m=m,
        delta=float(delta),
        breakpoints=s,
        lower=lower,
        upper=upper,
        kappa=float(kappa),
    )

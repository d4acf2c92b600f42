"""Threshold curves and coverage diagnostics built on CDF bands.

Thresholding a band's lower envelope at 1 - alpha turns a single calibration
pass into a whole curve of prediction-set cutoffs that are valid for every
alpha at once: on the band event, the set {z : s(z) <= q_hat(alpha)} covers
with probability at least 1 - alpha simultaneously over alpha, so alpha may
be picked after looking at the curve.

Also here: the split-conformal and inflated-level PAC baselines, the plain
training-quantile cutoff (no guarantee, used as a comparison), residual
diagnostics measuring the price of simultaneity, the closed-form fixed-alpha
PAC levels for the DKW and adjusted-KL bands, and the exact marginal-coverage
curve from the beta law of uniform order statistics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .bands import StepBand, as_sorted_scores
from .numerics import beta_cdf, dw_correction

__all__ = [
    "ThresholdCurve",
    "simultaneous_thresholds",
    "threshold_at",
    "split_threshold",
    "vovk_pac_threshold",
    "empirical_quantile_threshold",
    "residual_bound",
    "residual_envelope",
    "kappa_dkw",
    "kappa_dw",
    "dw_index_gap",
    "dkw_coverage_floor",
    "dw_coverage_floor",
    "exact_marginal_coverage",
]

_CSV_COLUMNS = ("alpha", "method", "j_alpha", "q_hat", "slack", "band_width", "r_bound", "kappa_alpha")


def _ceil_count(x: float) -> int:
    # ceil with a tiny inward nudge so float noise cannot bump an exact integer
    return math.ceil(x - 1e-9)


@dataclass(frozen=True)
class ThresholdCurve:
    """Per-alpha thresholds and diagnostics read off one band.

    ``q_hat`` is +inf where no order statistic qualifies (the prediction set
    is the whole space); the diagnostic columns are NaN there and where a
    diagnostic is undefined for the band's method.
    """

    method: str
    m: int
    delta: float
    alphas: np.ndarray
    j_alpha: np.ndarray  # float; NaN where q_hat is infinite
    q_hat: np.ndarray
    slack: np.ndarray
    band_width: np.ndarray
    r_bound: np.ndarray
    kappa_alpha: np.ndarray
    ties: bool = False

    def __post_init__(self):
        for name in ("alphas", "j_alpha", "q_hat", "slack", "band_width", "r_bound", "kappa_alpha"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
            if arr.shape != self.alphas.shape:
                raise ValueError(f"{name} must match the alpha grid shape")
        if np.any(np.diff(self.alphas) <= 0):
            raise ValueError("alpha grid must be strictly increasing")
        finite_j = self.j_alpha[~np.isnan(self.j_alpha)]
        if np.any(np.diff(finite_j) > 0):
            raise ValueError("j_alpha must be nonincreasing in alpha")
        q = self.q_hat
        if np.any(q[:-1] < q[1:]):
            raise ValueError("thresholds must be nonincreasing in alpha (nested sets)")

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for i, a in enumerate(self.alphas):
            writer.writerow(
                [
                    f"{a:.10g}",
                    self.method,
                    _cell(self.j_alpha[i], integer=True),
                    _cell(self.q_hat[i]),
                    _cell(self.slack[i]),
                    _cell(self.band_width[i]),
                    _cell(self.r_bound[i]),
                    _cell(self.kappa_alpha[i]),
                ]
            )
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.csv_text())


def _cell(v: float, integer: bool = False) -> str:
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if integer:
        return str(int(v))
    return f"{v:.10g}"


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def _check_restriction(band: StepBand, alphas) -> None:
    if band.restriction is None:
        return
    a0, a1 = band.restriction
    bad = [float(a) for a in np.atleast_1d(alphas) if not (a0 <= a <= a1)]
    if bad:
        raise ValueError(f"alpha values {bad} lie outside the band's restriction [{a0}, {a1}]")


def threshold_at(band: StepBand, alpha: float) -> tuple[int | None, float]:
    """(j_alpha, q_hat) for a single alpha; (None, +inf) when nothing qualifies."""
    alpha = _check_alpha(alpha)
    _check_restriction(band, [alpha])
    j = int(np.searchsorted(band.lower, 1.0 - alpha, side="left"))
    if j > band.m:
        return None, math.inf
    return j, float(band.breakpoints[j - 1])


def simultaneous_thresholds(band: StepBand, alphas) -> ThresholdCurve:
    """Threshold curve q_hat(alpha) = S'_{j_alpha}, j_alpha = min{j : l_j >= 1 - alpha}.

    The grid is sorted and deduplicated; every alpha must lie inside the
    band's restriction when one is set.  Diagnostics per alpha: slack
    l_{j_alpha} - (1 - alpha), band width at j_alpha, their sum (the residual
    bounding how far coverage can overshoot 1 - alpha on the band event), and
    the fixed-alpha PAC level where the band's method has a closed form.
    """
    grid = np.unique(np.asarray(alphas, dtype=np.float64))
    if grid.size == 0:
        raise ValueError("alpha grid is empty")
    if not (np.all(grid > 0.0) and np.all(grid < 1.0)):
        raise ValueError("alpha grid must lie strictly inside (0, 1)")
    _check_restriction(band, grid)

    j_idx = np.searchsorted(band.lower, 1.0 - grid, side="left")
    feasible = j_idx <= band.m
    j_alpha = np.where(feasible, j_idx, np.nan).astype(np.float64)
    q_hat = np.full(grid.size, np.inf)
    slack = np.full(grid.size, np.nan)
    width = np.full(grid.size, np.nan)
    f = feasible
    q_hat[f] = band.breakpoints[j_idx[f] - 1]
    slack[f] = band.lower[j_idx[f]] - (1.0 - grid[f])
    width[f] = band.upper[j_idx[f]] - band.lower[j_idx[f]]
    r_bound = slack + width

    kappa_alpha = np.full(grid.size, np.nan)
    if band.method == "dkw" and band.sided == "two-sided":
        kappa_alpha = np.array([kappa_dkw(a, band.delta, band.m) for a in grid])
    elif band.method == "dw" and band.kappa is not None:
        kappa_alpha = np.array([kappa_dw(a, band) for a in grid])

    ties = bool(np.any(np.diff(band.breakpoints) == 0.0))
    return ThresholdCurve(
        method=band.method,
        m=band.m,
        delta=band.delta,
        alphas=grid,
        j_alpha=j_alpha,
        q_hat=q_hat,
        slack=slack,
        band_width=width,
        r_bound=r_bound,
        kappa_alpha=kappa_alpha,
        ties=ties,
    )


# ---------------------------------------------------------------------------
# baseline thresholds


def split_threshold(scores, alpha: float) -> float:
    """Split-conformal cutoff S'_k, k = ceil((m + 1)(1 - alpha)); +inf if k > m."""
    alpha = _check_alpha(alpha)
    s = as_sorted_scores(scores)
    m = s.size
    k = _ceil_count((m + 1) * (1.0 - alpha))
    if k > m:
        return math.inf
    return float(s[max(k, 1) - 1])


def vovk_pac_threshold(scores, alpha: float, delta: float) -> float:
    """Fixed-alpha PAC cutoff: split level inflated by sqrt(ln(1/delta)/(2m)).

    Returns the smallest order statistic whose ECDF value reaches the
    inflated level, +inf when the level exceeds 1.
    """
    alpha = _check_alpha(alpha)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    s = as_sorted_scores(scores)
    m = s.size
    level = _ceil_count((m + 1) * (1.0 - alpha)) / m + math.sqrt(math.log(1.0 / delta) / (2.0 * m))
    if level > 1.0:
        return math.inf
    k = min(max(_ceil_count(m * level), 1), m)
    return float(s[k - 1])


def empirical_quantile_threshold(scores, alpha: float) -> float:
    """Plain (1 - alpha) empirical quantile S'_k, k = ceil(m (1 - alpha)).

    No coverage guarantee; the comparison baseline that scores the data it
    was trained on.
    """
    alpha = _check_alpha(alpha)
    s = as_sorted_scores(scores)
    k = min(max(_ceil_count(s.size * (1.0 - alpha)), 1), s.size)
    return float(s[k - 1])


# ---------------------------------------------------------------------------
# residual diagnostics


def residual_bound(band: StepBand, curve: ThresholdCurve):
    """(slack, width, residual) arrays for a curve built from this band."""
    if curve.m != band.m:
        raise ValueError("curve and band disagree on m")
    return curve.slack, curve.band_width, curve.r_bound


def residual_envelope(band: StepBand, curve: ThresholdCurve) -> np.ndarray:
    """Closed-form per-alpha upper bound on the residual for dkw/dw bands.

    dkw: sqrt(2 ln(2/delta) / m) + 1/m, constant in alpha.
    dw: width at j_alpha plus width at j_alpha - 1 plus 1/m.
    Requires distinct scores for the bound to be meaningful (curve.ties
    flags violations).
    """
    m = band.m
    if band.method == "dkw":
        if band.sided != "two-sided":
            raise ValueError("the residual envelope is defined for the two-sided variant")
        return np.full(curve.alphas.size, math.sqrt(2.0 * math.log(2.0 / band.delta) / m) + 1.0 / m)
    if band.method == "dw":
        env = np.full(curve.alphas.size, np.nan)
        w = band.widths()
        for i, j in enumerate(curve.j_alpha):
            if not math.isnan(j):
                j = int(j)
                env[i] = w[j] + w[j - 1] + 1.0 / m
        return env
    raise ValueError(f"no closed-form residual envelope for method {band.method!r}")


# ---------------------------------------------------------------------------
# fixed-alpha PAC levels and marginal coverage


def kappa_dkw(alpha: float, delta: float, m: int) -> float:
    """Fixed-alpha failure level of the DKW simultaneous threshold.

    Three branches around alpha = 1/2 with margin
    Delta = sqrt(2 ln(2/delta) / (9m)) + 1/(3m); always <= delta/2.
    """
    alpha = _check_alpha(alpha)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    gap = math.sqrt(2.0 * math.log(2.0 / delta) / (9.0 * m)) + 1.0 / (3.0 * m)
    half_delta = delta / 2.0
    if alpha <= 0.5:
        return half_delta ** (1.0 / (4.0 * alpha * (1.0 - alpha)))
    if alpha <= 0.5 + gap:
        return half_delta
    a = alpha - gap
    return half_delta ** (1.0 / (4.0 * a * (1.0 - a)))


def dw_index_gap(band: StepBand) -> float:
    """max over j = 1..m of (j + 1)/m - lower[j], the margin in the kappa branches."""
    m = band.m
    j = np.arange(1, m + 1, dtype=np.float64)
    return float(np.max((j + 1.0) / m - band.lower[1:]))


def kappa_dw(alpha: float, band: StepBand) -> float:
    """Fixed-alpha failure level of the adjusted-KL simultaneous threshold.

    Reads m, nu and the calibrated critical value off the band (they must be
    mutually consistent, which the band construction guarantees); always
    <= exp(-kappa_n).  Defined for unrestricted bands; a restricted band's
    trivial region inflates the index gap and with it this bound.
    """
    alpha = _check_alpha(alpha)
    if band.method != "dw" or band.kappa is None or band.nu is None:
        raise ValueError("kappa_dw needs a band built by dw_band (method 'dw' with kappa and nu)")
    kappa_n = band.kappa
    gap = dw_index_gap(band)
    if alpha < 0.5:
        return math.exp(-dw_correction(1.0 - alpha, band.nu) - kappa_n)
    if alpha <= 0.5 + gap:
        return math.exp(-kappa_n)
    return math.exp(-dw_correction(1.0 - alpha + gap, band.nu) - kappa_n)


def dkw_coverage_floor(delta: float) -> float:
    """Marginal-coverage floor 1 - delta/2 of the DKW threshold at any alpha."""
    return 1.0 - delta / 2.0


def dw_coverage_floor(kappa_n: float) -> float:
    """Marginal-coverage floor 1 - exp(-kappa_n) of the adjusted-KL threshold."""
    return 1.0 - math.exp(-kappa_n)


def exact_marginal_coverage(j: int, m: int, alpha: float) -> float:
    """P(coverage of the set cut at S'_j is >= 1 - alpha), scores continuous.

    The CDF value of the j-th of m uniform order statistics is
    Beta(j, m - j + 1), so the probability is its upper tail at 1 - alpha.
    """
    alpha = _check_alpha(alpha)
    if not (isinstance(j, (int, np.integer)) and isinstance(m, (int, np.integer))):
        raise ValueError("j and m must be integers")
    if not (1 <= j <= m):
        raise ValueError(f"need 1 <= j <= m, got j={j}, m={m}")
    return 1.0 - beta_cdf(int(j), int(m - j + 1), 1.0 - alpha)

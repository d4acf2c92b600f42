"""Non-conformity scores and data splitting.

Three score families, all consuming model outputs as plain numbers so the
library stays free of ML-framework dependencies: inverse density for
arbitrary prediction sets, the conditional-CDF distance whose sublevel sets
are predictive intervals, and the randomized cumulative-probability score for
classification whose sublevel sets are the adaptive label sets.

Everything downstream only needs the calibration scores, so this module also
owns the train/calibration split and the score file formats.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataSplit",
    "ScoreSet",
    "split_data",
    "density_score",
    "dcp_score",
    "as_prob_vector",
    "aps_quantile_L",
    "aps_set",
    "aps_score",
    "load_scores",
    "save_scores",
    "load_prob_matrix",
]


@dataclass(frozen=True)
class DataSplit:
    n: int
    train_idx: np.ndarray
    cal_idx: np.ndarray
    seed: int

    def __post_init__(self):
        tr = np.asarray(self.train_idx, dtype=np.int64)
        ca = np.asarray(self.cal_idx, dtype=np.int64)
        object.__setattr__(self, "train_idx", tr)
        object.__setattr__(self, "cal_idx", ca)
        if tr.size == 0 or ca.size == 0:
            raise ValueError("both split parts must be nonempty")
        merged = np.concatenate([tr, ca])
        merged.sort()
        if not np.array_equal(merged, np.arange(self.n)):
            raise ValueError("train and calibration indices must partition range(n)")


def split_data(n: int, cal_fraction: float, seed: int) -> DataSplit:
    """Random disjoint train/calibration split with round(n * cal_fraction)
    calibration points; deterministic given (n, cal_fraction, seed)."""
    if n < 2:
        raise ValueError(f"need n >= 2 to split, got {n}")
    if not (0.0 < cal_fraction < 1.0):
        raise ValueError(f"cal_fraction must lie in (0, 1), got {cal_fraction!r}")
    m_cal = int(math.floor(n * cal_fraction + 0.5))  # round half up, platform stable
    if m_cal < 1 or m_cal > n - 1:
        raise ValueError(f"cal_fraction={cal_fraction} leaves an empty part for n={n}")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    perm = gen.permutation(n)
    cal = np.sort(perm[:m_cal])
    train = np.sort(perm[m_cal:])
    return DataSplit(n=n, train_idx=train, cal_idx=cal, seed=int(seed))


@dataclass(frozen=True)
class ScoreSet:
    """Calibration scores with their order statistics precomputed."""

    values: np.ndarray
    sorted_values: np.ndarray
    m: int
    has_ties: bool

    @classmethod
    def from_values(cls, values) -> "ScoreSet":
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("scores must be a nonempty 1-d collection")
        if np.isnan(v).any():
            raise ValueError("scores must not contain NaN")
        s = np.sort(v)
        return cls(values=v, sorted_values=s, m=v.size, has_ties=bool(np.any(np.diff(s) == 0.0)))

    def __len__(self) -> int:
        return self.m


# ---------------------------------------------------------------------------
# score functions


def density_score(density_value):
    """Inverse estimated density 1/p(z); +inf at p(z) = 0 (a zero-density
    point disagrees maximally with the training distribution)."""
    p = np.asarray(density_value, dtype=np.float64)
    if np.any(p < 0.0) or np.isnan(p).any():
        raise ValueError("density values must be nonnegative")
    with np.errstate(divide="ignore"):
        out = 1.0 / p
    return float(out) if out.ndim == 0 else out


def dcp_score(h_value):
    """Distance |H(y|x) - 1/2| of a conditional-CDF value from the median.

    Sublevel sets {s <= t} pull back to the conditional-quantile interval
    with CDF endpoints 1/2 - t and 1/2 + t, so they are nested intervals.
    """
    h = np.asarray(h_value, dtype=np.float64)
    if np.any(h < 0.0) or np.any(h > 1.0) or np.isnan(h).any():
        raise ValueError("conditional CDF values must lie in [0, 1]")
    out = np.abs(h - 0.5)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# randomized classification score


def as_prob_vector(pi) -> np.ndarray:
    p = np.asarray(pi, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("need a probability vector over at least two labels")
    if np.any(p < 0.0) or np.isnan(p).any():
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
    return p


def _descending_order(p: np.ndarray) -> np.ndarray:
    # ties broken by ascending label index for platform-stable sets
    return np.argsort(-p, kind="stable")


def aps_quantile_L(pi, tau: float) -> int:
    """Smallest count of top-probability labels whose mass reaches tau."""
    p = as_prob_vector(pi)
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    cum = np.cumsum(p[_descending_order(p)])
    cum[-1] = 1.0  # kill float shortfall so tau = 1 is always reachable
    return int(np.searchsorted(cum, tau, side="left")) + 1


def aps_set(pi, u: float, tau: float) -> list[int]:
    """Randomized top-probability label set with conditional mass exactly tau.

    Takes the L - 1 largest labels when u <= V (V the overshoot fraction of
    the L-th label), else the L largest.  May be empty when L = 1 and the
    draw removes the top label; downstream coverage accounting allows that.
    Returns 0-based labels sorted ascending.
    """
    p = as_prob_vector(pi)
    if not (0.0 <= u <= 1.0):
        raise ValueError(f"u must lie in [0, 1], got {u!r}")
    order = _descending_order(p)
    big_l = aps_quantile_L(p, tau)
    top_sum = float(np.cumsum(p[order])[big_l - 1])
    p_l = float(p[order[big_l - 1]])
    v = (top_sum - tau) / p_l if p_l > 0.0 else 0.0
    count = big_l - 1 if u <= v else big_l
    return sorted(int(c) for c in order[:count])


def aps_score(pi, y: int, u: float) -> float:
    """Smallest tau at which label y enters aps_set(pi, u, tau).

    Closed form: with r the descending rank of y and T_r the mass of the r
    largest labels, the entry point is T_r - u * pi_y (the set is open there;
    this is the infimum).  Clipped to [0, 1].
    """
    p = as_prob_vector(pi)
    if not (0.0 <= u <= 1.0):
        raise ValueError(f"u must lie in [0, 1], got {u!r}")
    if not (isinstance(y, (int, np.integer)) and 0 <= y < p.size):
        raise ValueError(f"y must be a label index in [0, {p.size}), got {y!r}")
    order = _descending_order(p)
    rank = int(np.nonzero(order == y)[0][0]) + 1
    top_sum = float(np.cumsum(p[order])[rank - 1])
    return float(min(max(top_sum - u * p[y], 0.0), 1.0))


# ---------------------------------------------------------------------------
# file formats


def load_scores(path) -> ScoreSet:
    """Score CSV: one value per line, optional single 'score' header; 'inf' allowed."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.lower() == "score":
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not a score value: {line!r}") from exc
    if not values:
        raise ValueError(f"{path}: no scores found")
    return ScoreSet.from_values(values)


def save_scores(scores, path) -> None:
    values = scores.values if isinstance(scores, ScoreSet) else np.asarray(scores, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("score\n")
        for v in values:
            if math.isinf(v):
                fh.write("inf\n" if v > 0 else "-inf\n")
            else:
                fh.write(f"{float(v)!r}\n")


def load_prob_matrix(path) -> np.ndarray:
    """Probability-matrix CSV: one row per observation, C >= 2 columns.

    Rows must sum to 1 within 1e-6 and are renormalized exactly afterwards.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec:
                continue
            try:
                row = [float(c) for c in rec]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric probability row") from exc
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no probability rows found")
    mat = np.asarray(rows, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] < 2:
        raise ValueError("probability matrix needs at least two columns")
    if np.any(mat < 0.0):
        raise ValueError("probabilities must be nonnegative")
    sums = mat.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > 1e-6)[0]
    if bad.size:
        raise ValueError(f"row {bad[0] + 1} sums to {sums[bad[0]]!r}, not 1 within 1e-6")
    return mat / sums[:, None]

"""Desk-scale experiment harness.

Runs the whole evaluation loop at laptop sizes: draw a regression
dataset with a contaminated Poisson response, fit a k-nearest-neighbor
conditional CDF as the score model, calibrate thresholds with each requested
method, and measure per-alpha coverage, interval width against the true
(Monte Carlo) conditional quantile widths, and the all-alpha simultaneity
indicator across replications.

A second mode skips modeling entirely: with standard-uniform scores the score
CDF is the identity, so the coverage of a threshold t is exactly clip(t, 0, 1)
and simultaneity can be checked without test-set noise.

RNG layout: one root seed; replication r draws purpose p (0 = train, 1 = cal,
2 = test) from SeedSequence(seed, spawn_key=(r, p)); the oracle-width grid
uses spawn_key=(i, 1000); Monte Carlo critical values use the length-1
spawn keys of the band calibrator.  No stream is shared, so adding methods
or replications never perturbs existing draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import bands

__all__ = [
    "SimConfig",
    "EvalReport",
    "KnnCdf",
    "default_alpha_grid",
    "simulate_dataset",
    "oracle_conditional_quantiles",
    "evaluate_methods",
]

METHODS = ("dkw-sim", "dw-sim", "split", "train-quantile")
MODES = ("uniform", "dcp-sim")

_PURPOSE_TRAIN, _PURPOSE_CAL, _PURPOSE_TEST = 0, 1, 2
_ORACLE_STREAM = 1000


def default_alpha_grid(restriction=None) -> np.ndarray:
    """0.05 to 0.95 in steps of 0.01, intersected with the restriction."""
    grid = np.linspace(0.05, 0.95, 91)
    if restriction is not None:
        a0, a1 = restriction
        grid = grid[(grid >= a0 - 1e-12) & (grid <= a1 + 1e-12)]
        if grid.size == 0:
            raise ValueError(f"restriction {restriction!r} leaves no grid levels")
    return grid


@dataclass(frozen=True)
class SimConfig:
    mode: str = "dcp-sim"
    n_train: int = 2000
    n_cal: int = 1000
    n_test: int = 2000
    reps: int = 100
    delta: float = 0.1
    alpha_grid: tuple = ()
    methods: tuple = METHODS
    seed: int = 0
    restriction: tuple | None = None
    k_neighbors: int = 50
    nu: float = 1.5
    mc_reps: int = 100_000
    oracle_mc_reps: int = 100_000
    oracle_grid_size: int = 161

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("n_train", "n_cal", "n_test", "reps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        grid = np.asarray(self.alpha_grid if len(self.alpha_grid) else default_alpha_grid(self.restriction))
        if np.any(grid <= 0.0) or np.any(grid >= 1.0) or np.any(np.diff(grid) <= 0):
            raise ValueError("alpha_grid must be strictly increasing inside (0, 1)")
        if self.restriction is not None:
            a0, a1 = self.restriction
            if not (0.0 <= a0 < a1 <= 1.0):
                raise ValueError(f"restriction must be an interval inside [0, 1], got {self.restriction!r}")
            if np.any(grid < a0 - 1e-12) or np.any(grid > a1 + 1e-12):
                raise ValueError("alpha_grid must lie inside the restriction")
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in grid))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; available: {METHODS}")
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.mode == "dcp-sim" and self.k_neighbors > self.n_train:
            raise ValueError("k_neighbors cannot exceed n_train")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_train": self.n_train,
            "n_cal": self.n_cal,
            "n_test": self.n_test,
            "reps": self.reps,
            "delta": self.delta,
            "alpha_grid": list(self.alpha_grid),
            "methods": list(self.methods),
            "seed": self.seed,
            "restriction": None if self.restriction is None else list(self.restriction),
            "k_neighbors": self.k_neighbors,
            "nu": self.nu,
            "mc_reps": self.mc_reps,
            "oracle_mc_reps": self.oracle_mc_reps,
            "oracle_grid_size": self.oracle_grid_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        kwargs = dict(d)
        if kwargs.get("restriction") is not None:
            kwargs["restriction"] = tuple(kwargs["restriction"])
        if "alpha_grid" in kwargs:
            kwargs["alpha_grid"] = tuple(kwargs["alpha_grid"])
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        return cls(**kwargs)


def _stream(seed: int, *spawn_key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)))


# ---------------------------------------------------------------------------
# data model


def _draw_response(gen: np.random.Generator, x: np.ndarray) -> np.ndarray:
    lam = np.sin(x) ** 2 + 0.1
    y = gen.poisson(lam).astype(np.float64)
    y += 0.03 * x
    y += gen.standard_normal(x.size)
    contaminated = gen.random(x.size) < 0.01
    y += np.where(contaminated, gen.standard_normal(x.size), 0.0)
    return y


def simulate_dataset(n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Contaminated Poisson regression draw: X uniform on [1, 5],
    Y = Poisson(sin^2 X + 0.1) + 0.03 X + noise + rare extra noise."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if isinstance(seed, np.random.SeedSequence):
        gen = np.random.Generator(np.random.Philox(seed))
    else:
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=int(seed))))
    x = gen.uniform(1.0, 5.0, n)
    return x, _draw_response(gen, x)


def oracle_conditional_quantiles(x: float, alphas, mc_reps: int = 100_000, *, seed: int) -> np.ndarray:
    """Monte Carlo widths of the central (1 - alpha) intervals of Y | X = x."""
    if mc_reps < 10_000:
        raise ValueError("need mc_reps >= 10^4 for stable oracle quantiles")
    alphas = np.asarray(alphas, dtype=np.float64)
    gen = _stream(int(seed), 0, _ORACLE_STREAM)
    draws = _draw_response(gen, np.full(mc_reps, float(x)))
    lo = np.quantile(draws, alphas / 2.0)
    hi = np.quantile(draws, 1.0 - alphas / 2.0)
    return hi - lo


class _OracleWidths:
    """Central-interval widths on an x-grid, interpolated at query points."""

    def __init__(self, alphas: np.ndarray, seed: int, mc_reps: int, grid_size: int):
        self.alphas = alphas
        self.grid = np.linspace(1.0, 5.0, grid_size)
        self.widths = np.empty((alphas.size, grid_size))
        for i, gx in enumerate(self.grid):
            gen = _stream(seed, i, _ORACLE_STREAM)
            draws = _draw_response(gen, np.full(mc_reps, gx))
            self.widths[:, i] = np.quantile(draws, 1.0 - alphas / 2.0) - np.quantile(draws, alphas / 2.0)

    def at(self, alpha_index: int, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.grid, self.widths[alpha_index])


# ---------------------------------------------------------------------------
# k-NN conditional CDF


class KnnCdf:
    """Conditional CDF estimate: the ECDF of the responses of the k training
    points nearest in x.  Nearest neighbors of sorted x values form a
    contiguous window, so the window start is found by scanning the k + 1
    candidate offsets around the insertion point (exact, ties to the left)."""

    def __init__(self, x_train, y_train, k: int):
        x = np.asarray(x_train, dtype=np.float64)
        y = np.asarray(y_train, dtype=np.float64)
        if x.ndim != 1 or x.size == 0 or x.shape != y.shape:
            raise ValueError("training data must be nonempty 1-d x/y of equal length")
        if not (1 <= k <= x.size):
            raise ValueError(f"k must lie in [1, {x.size}], got {k}")
        order = np.argsort(x, kind="stable")
        self.x = x[order]
        self.y = y[order]
        self.k = int(k)

    def window_starts(self, xq) -> np.ndarray:
        xq = np.asarray(xq, dtype=np.float64)
        n, k = self.x.size, self.k
        pos = np.searchsorted(self.x, xq)
        cand = np.clip(pos[:, None] + np.arange(-k, 1)[None, :], 0, n - k)
        radius = np.maximum(
            np.abs(xq[:, None] - self.x[cand]),
            np.abs(self.x[cand + k - 1] - xq[:, None]),
        )
        return cand[np.arange(xq.size), np.argmin(radius, axis=1)]

    def window_responses(self, xq, sort: bool = False) -> np.ndarray:
        starts = self.window_starts(xq)
        block = self.y[starts[:, None] + np.arange(self.k)[None, :]]
        if sort:
            block = np.sort(block, axis=1)
        return block

    def cdf(self, xq, yq) -> np.ndarray:
        yq = np.asarray(yq, dtype=np.float64)
        block = self.window_responses(xq)
        return (block <= yq[:, None]).mean(axis=1)

    def score(self, xq, yq) -> np.ndarray:
        return np.abs(self.cdf(xq, yq) - 0.5)

    def interval_width(self, sorted_block: np.ndarray, t: float) -> np.ndarray:
        """Widths of {y : |H(y|x) - 1/2| <= t} per row of presorted responses.

        The set is [R_(ceil(k(1/2 - t))), R_(floor(k(1/2 + t)) + 1)); an index
        outside 1..k means the set is unbounded on that side (infinite width).
        """
        k = self.k
        if math.isinf(t):
            return np.full(sorted_block.shape[0], np.inf)
        idx_a = math.ceil(k * (0.5 - t) - 1e-9)
        idx_b = math.floor(k * (0.5 + t) + 1e-9) + 1
        out = np.full(sorted_block.shape[0], np.inf)
        if idx_a >= 1 and idx_b <= k:
            out = sorted_block[:, idx_b - 1] - sorted_block[:, idx_a - 1]
        return out


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class EvalReport:
    config: dict
    calibration: dict
    methods: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": self.config, "calibration": self.calibration, "methods": self.methods}

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=1, sort_keys=True, allow_nan=False)
            fh.write("\n")

    def per_alpha_csv(self, path) -> None:
        cols = (
            "method,alpha,coverage_mean,coverage_sd,width_mean,width_ratio_mean,"
            "finite_fraction,simultaneity_rate"
        )
        lines = [cols]
        alphas = self.config["alpha_grid"]
        for name, rec in self.methods.items():
            for i, a in enumerate(alphas):
                cells = [
                    name,
                    f"{a:.10g}",
                    _csv_num(rec["coverage_mean"][i]),
                    _csv_num(rec["coverage_sd"][i]),
                    _csv_num(rec["width_mean"][i]),
                    _csv_num(rec["width_ratio_mean"][i]),
                    _csv_num(rec["finite_fraction"][i]),
                    f"{rec['simultaneity_rate']:.10g}",
                ]
                lines.append(",".join(cells))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _csv_num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.10g}"


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    return v


def _threshold_indices(lower: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    # index of the qualifying order statistic per alpha; m + 1 means none
    return np.searchsorted(lower, 1.0 - alphas, side="left")


def _order_stat_or_inf(sorted_vals: np.ndarray, idx: np.ndarray) -> np.ndarray:
    out = np.full(idx.size, np.inf)
    ok = idx <= sorted_vals.size
    out[ok] = sorted_vals[idx[ok] - 1]
    return out


def evaluate_methods(config: SimConfig) -> EvalReport:
    """Run the replication loop and aggregate per-method metrics.

    Deterministic given the config: rerunning produces an identical report.
    Band envelope values depend only on (m, delta, nu, restriction), so they
    are computed once and reused across replications; only the breakpoints
    (the scores) change per replication.
    """
    alphas = np.asarray(config.alpha_grid)
    m = config.n_cal
    calibration: dict = {}

    j_by_method: dict[str, np.ndarray] = {}
    if "dkw-sim" in config.methods:
        eps = math.sqrt(math.log(2.0 / config.delta) / (2.0 * m))
        lower = np.clip(np.arange(m + 1) / m - eps, 0.0, 1.0)
        lower[0] = 0.0
        j_by_method["dkw-sim"] = _threshold_indices(lower, alphas)
        calibration["dkw_epsilon"] = eps
    if "dw-sim" in config.methods:
        kappa = bands.mc_quantile(
            "dw",
            m,
            config.delta,
            nu=config.nu,
            restriction=config.restriction,
            reps=config.mc_reps,
            seed=config.seed,
        )
        template = bands.dw_band(
            np.arange(1, m + 1) / (m + 1.0),
            config.delta,
            kappa,
            nu=config.nu,
            restriction=config.restriction,
        )
        j_by_method["dw-sim"] = _threshold_indices(template.lower, alphas)
        calibration["dw_kappa"] = kappa
    if "split" in config.methods:
        k_split = np.array([math.ceil((m + 1) * (1.0 - a) - 1e-9) for a in alphas])
        j_by_method["split"] = k_split
    if "train-quantile" in config.methods:
        n_tr = config.n_train
        k_train = np.array([min(max(math.ceil(n_tr * (1.0 - a) - 1e-9), 1), n_tr) for a in alphas])

    oracle = None
    if config.mode == "dcp-sim":
        oracle = _OracleWidths(alphas, config.seed, config.oracle_mc_reps, config.oracle_grid_size)

    n_a = alphas.size
    cov = {name: np.empty((config.reps, n_a)) for name in config.methods}
    width = {name: np.full((config.reps, n_a), np.nan) for name in config.methods}
    ratio = {name: np.full((config.reps, n_a), np.nan) for name in config.methods}
    finite = {name: np.full((config.reps, n_a), np.nan) for name in config.methods}

    for r in range(config.reps):
        if config.mode == "uniform":
            cal_sorted = np.sort(_stream(config.seed, r, _PURPOSE_CAL).random(m))
            train_sorted = np.sort(_stream(config.seed, r, _PURPOSE_TRAIN).random(config.n_train))
            for name in config.methods:
                if name == "train-quantile":
                    q = train_sorted[k_train - 1]
                else:
                    q = _order_stat_or_inf(cal_sorted, j_by_method[name])
                cov[name][r] = np.clip(q, 0.0, 1.0)
                finite[name][r] = np.isfinite(q)
            continue

        gen_tr = _stream(config.seed, r, _PURPOSE_TRAIN)
        x_tr = gen_tr.uniform(1.0, 5.0, config.n_train)
        y_tr = _draw_response(gen_tr, x_tr)
        gen_cal = _stream(config.seed, r, _PURPOSE_CAL)
        x_cal = gen_cal.uniform(1.0, 5.0, config.n_cal)
        y_cal = _draw_response(gen_cal, x_cal)
        gen_te = _stream(config.seed, r, _PURPOSE_TEST)
        x_te = gen_te.uniform(1.0, 5.0, config.n_test)
        y_te = _draw_response(gen_te, x_te)

        model = KnnCdf(x_tr, y_tr, config.k_neighbors)
        cal_sorted = np.sort(model.score(x_cal, y_cal))
        test_scores = model.score(x_te, y_te)
        test_block = model.window_responses(x_te, sort=True)

        for name in config.methods:
            if name == "train-quantile":
                train_scores = np.sort(model.score(x_tr, y_tr))
                q = train_scores[k_train - 1]
            else:
                q = _order_stat_or_inf(cal_sorted, j_by_method[name])
            for i in range(n_a):
                cov[name][r, i] = float(np.mean(test_scores <= q[i]))
                w = model.interval_width(test_block, q[i])
                width[name][r, i] = float(np.mean(w))
                finite[name][r, i] = float(np.mean(np.isfinite(w)))
                ratio[name][r, i] = float(np.mean(w / oracle.at(i, x_te)))

    methods_out = {}
    for name in config.methods:
        ok = cov[name] >= (1.0 - alphas)[None, :] - 1e-12
        simultaneous = np.all(ok, axis=1)
        methods_out[name] = {
            "coverage_mean": cov[name].mean(axis=0).tolist(),
            "coverage_sd": cov[name].std(axis=0, ddof=1).tolist() if config.reps > 1 else [0.0] * n_a,
            "width_mean": width[name].mean(axis=0).tolist(),
            "width_ratio_mean": ratio[name].mean(axis=0).tolist(),
            "finite_fraction": finite[name].mean(axis=0).tolist(),
            "simultaneous_count": int(simultaneous.sum()),
            "simultaneity_rate": float(simultaneous.mean()),
        }

    return EvalReport(config=config.to_dict(), calibration=calibration, methods=methods_out)

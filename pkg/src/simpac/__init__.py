"""Simultaneously valid conformal prediction thresholds from CDF bands.

Calibrate once, then read off a prediction-set cutoff for any miscoverage
level alpha, with one training-conditional guarantee covering every alpha at
the same time.  The mechanism is a finite-sample confidence band for the CDF
of the calibration scores; thresholding its lower envelope yields nested
prediction sets whose coverage claims all hold on a single event of
probability at least 1 - delta.
"""

from .bands import (
    QuantileTable,
    StepBand,
    comparison_band,
    dkw_band,
    dw_band,
    dw_statistic,
    ecdf,
    load_band,
    load_quantile_table,
    mc_quantile,
    quantile_table,
    save_band,
    save_quantile_table,
    simulate_statistics,
)
from .harness import EvalReport, KnnCdf, SimConfig, default_alpha_grid, evaluate_methods, simulate_dataset
from .kernels import BACKEND as kernel_backend
from .numerics import beta_cdf, dw_correction, dw_correction_min, kl_bernoulli
from .pac import (
    ThresholdCurve,
    empirical_quantile_threshold,
    exact_marginal_coverage,
    kappa_dkw,
    kappa_dw,
    residual_envelope,
    simultaneous_thresholds,
    split_threshold,
    threshold_at,
    vovk_pac_threshold,
)
from .rwset import (
    InfeasibleSystemError,
    IntervalBounds,
    IntervalFamily,
    build_family,
    interval_bounds,
    pointwise_band_lp,
    rw_band,
    rw_statistic,
    solve_difference_system,
)
from .scores import (
    DataSplit,
    ScoreSet,
    aps_quantile_L,
    aps_score,
    aps_set,
    dcp_score,
    density_score,
    load_prob_matrix,
    load_scores,
    save_scores,
    split_data,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernel_backend",
    # numerics
    "kl_bernoulli",
    "dw_correction",
    "dw_correction_min",
    "beta_cdf",
    # bands
    "StepBand",
    "QuantileTable",
    "ecdf",
    "dkw_band",
    "dw_band",
    "comparison_band",
    "dw_statistic",
    "mc_quantile",
    "quantile_table",
    "simulate_statistics",
    "save_band",
    "load_band",
    "save_quantile_table",
    "load_quantile_table",
    # interval family
    "IntervalFamily",
    "IntervalBounds",
    "InfeasibleSystemError",
    "build_family",
    "rw_statistic",
    "interval_bounds",
    "solve_difference_system",
    "pointwise_band_lp",
    "rw_band",
    # thresholds
    "ThresholdCurve",
    "simultaneous_thresholds",
    "threshold_at",
    "split_threshold",
    "vovk_pac_threshold",
    "empirical_quantile_threshold",
    "residual_envelope",
    "kappa_dkw",
    "kappa_dw",
    "exact_marginal_coverage",
    # scores
    "DataSplit",
    "ScoreSet",
    "split_data",
    "density_score",
    "dcp_score",
    "aps_quantile_L",
    "aps_set",
    "aps_score",
    "load_scores",
    "save_scores",
    "load_prob_matrix",
    # harness
    "SimConfig",
    "EvalReport",
    "KnnCdf",
    "default_alpha_grid",
    "simulate_dataset",
    "evaluate_methods",
]

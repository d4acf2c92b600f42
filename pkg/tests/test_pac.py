"""Threshold curves, baselines, per-level guarantees, and exact marginal
coverage of order-statistic thresholds."""

import math

import numpy as np
import pytest

from simpac import bands, numerics, pac

# mpmath, mp.dps = 50
KAPPA_DKW_01_01 = 0.00024323596469704858333
KAPPA_DKW_095_01_M100 = 0.001634392909390926376
EMC_940_1000_01 = 0.99999562118009713721


def _manual_band(lower, upper, method="dkw", **kw):
    m = len(lower) - 1
    return bands.StepBand(
        method=method,
        m=m,
        delta=0.1,
        breakpoints=np.arange(1, m + 1) / (m + 1.0),
        lower=np.asarray(lower, dtype=np.float64),
        upper=np.asarray(upper, dtype=np.float64),
        **kw,
    )


def test_threshold_picks_first_qualifying_index():
    band = _manual_band([0.0, 0.2, 0.5, 0.9, 1.0], [1.0] * 5)
    j, q = pac.threshold_at(band, 0.2)
    assert j == 3
    assert q == band.breakpoints[2]
    j, q = pac.threshold_at(band, 0.05)  # needs lower >= 0.95: only j = 4
    assert j == 4
    j, q = pac.threshold_at(band, 0.5)
    assert j == 2


def test_threshold_infeasible_level():
    band = _manual_band([0.0, 0.1, 0.3, 0.6, 0.8], [1.0] * 5)
    j, q = pac.threshold_at(band, 0.05)
    assert j is None and q == math.inf


def test_simultaneous_thresholds_curve():
    band = _manual_band([0.0, 0.2, 0.5, 0.9, 1.0], [1.0] * 5)
    curve = pac.simultaneous_thresholds(band, [0.2, 0.5, 0.85])
    np.testing.assert_array_equal(curve.j_alpha, [3, 2, 1])
    np.testing.assert_array_equal(curve.q_hat, band.breakpoints[[2, 1, 0]])
    assert curve.m == 4
    # out-of-order levels are sorted and deduplicated, boundaries rejected
    shuffled = pac.simultaneous_thresholds(band, [0.5, 0.2, 0.5])
    np.testing.assert_array_equal(shuffled.alphas, [0.2, 0.5])
    with pytest.raises(ValueError):
        pac.simultaneous_thresholds(band, [0.0, 0.2])
    with pytest.raises(ValueError):
        pac.simultaneous_thresholds(band, [])


def test_curve_monotonicity(dw_band_100):
    alphas = np.linspace(0.05, 0.95, 91)
    curve = pac.simultaneous_thresholds(dw_band_100, alphas)
    finite = np.isfinite(curve.q_hat)
    assert np.all(np.diff(curve.q_hat[finite]) <= 1e-15)
    jj = curve.j_alpha[~np.isnan(curve.j_alpha)]
    assert np.all(np.diff(jj) <= 0)


def test_curve_csv_round_trip(tmp_path, dw_band_100):
    curve = pac.simultaneous_thresholds(dw_band_100, [0.02, 0.3, 0.6])
    text = curve.csv_text()
    lines = text.strip().split("\n")
    assert lines[0].split(",")[0] == "alpha"
    assert len(lines) == 4
    if not np.isfinite(curve.q_hat[0]):
        assert ",inf," in lines[1]
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    assert path.read_text() == text


def test_split_threshold_examples():
    s4 = np.array([0.1, 0.2, 0.3, 0.4])
    assert pac.split_threshold(s4, 0.5) == 0.3
    assert pac.split_threshold(s4, 0.1) == math.inf
    s1000 = np.arange(1, 1001) / 1001.0
    assert pac.split_threshold(s1000, 0.1) == 901 / 1001.0


def test_vovk_threshold_examples():
    s1000 = np.arange(1, 1001) / 1001.0
    assert pac.vovk_pac_threshold(s1000, 0.1, 0.05) == 940 / 1001.0
    s99 = np.arange(1, 100) / 100.0
    assert pac.vovk_pac_threshold(s99, 0.1, 0.05) == math.inf


def test_empirical_quantile_threshold():
    s = np.arange(1, 11) / 11.0
    assert pac.empirical_quantile_threshold(s, 0.25) == 8 / 11.0
    assert pac.empirical_quantile_threshold(s, 0.999) == 1 / 11.0  # clamped to k >= 1


def test_split_below_simultaneous(dw_band_100):
    # simultaneity can only push the threshold index up
    s = dw_band_100.breakpoints
    for a in (0.1, 0.3, 0.5, 0.7):
        j, q = pac.threshold_at(dw_band_100, a)
        if j is not None:
            assert pac.split_threshold(s, a) <= q + 1e-15


def test_kappa_dkw_branches():
    assert pac.kappa_dkw(0.5, 0.1, 1000) == 0.05
    assert math.isclose(pac.kappa_dkw(0.1, 0.1, 1000), KAPPA_DKW_01_01, rel_tol=1e-12)
    assert math.isclose(pac.kappa_dkw(0.95, 0.1, 100), KAPPA_DKW_095_01_M100, rel_tol=1e-12)
    # inside the flat window just above 1/2 the level sticks at delta/2
    delta_w = math.sqrt(2 * math.log(20.0) / 900.0) + 1.0 / 300.0
    assert pac.kappa_dkw(0.5 + delta_w / 2, 0.1, 100) == 0.05
    # never exceeds the alpha = 1/2 peak
    for a in np.linspace(0.01, 0.99, 99):
        k = pac.kappa_dkw(float(a), 0.1, 200)
        assert 0.0 < k <= 0.05 + 1e-15


def test_kappa_dw_reimplementation(dw_band_100):
    band = dw_band_100
    gap = pac.dw_index_gap(band)
    m = band.m
    want_gap = max((j + 1) / m - band.lower[j] for j in range(1, m + 1))
    assert math.isclose(gap, want_gap, rel_tol=1e-15)

    for a in (0.05, 0.3, 0.499, 0.5, 0.5 + gap / 2, 0.9):
        got = pac.kappa_dw(a, band)
        if a < 0.5:
            want = math.exp(-numerics.dw_correction(1.0 - a, band.nu) - band.kappa)
        elif a <= 0.5 + gap:
            want = math.exp(-band.kappa)
        else:
            want = math.exp(-numerics.dw_correction(1.0 - a + gap, band.nu) - band.kappa)
        assert math.isclose(got, want, rel_tol=1e-12)
    # continuous across the alpha = 1/2 seam
    left = pac.kappa_dw(0.5 - 1e-9, band)
    assert math.isclose(left, pac.kappa_dw(0.5, band), rel_tol=1e-6)


def test_kappa_dw_requires_dw_band():
    s = np.arange(1, 51) / 51.0
    dkw = bands.dkw_band(s, 0.1)
    with pytest.raises(ValueError):
        pac.kappa_dw(0.3, dkw)


def test_coverage_floors():
    assert pac.dkw_coverage_floor(0.1) == 0.95
    assert math.isclose(pac.dw_coverage_floor(3.0), 1.0 - math.exp(-3.0), rel_tol=1e-15)


def test_exact_marginal_coverage_values():
    assert math.isclose(pac.exact_marginal_coverage(10, 10, 0.1), 1.0 - 0.9**10, rel_tol=1e-12)
    assert pac.exact_marginal_coverage(1, 1, 0.5) == 0.5
    assert math.isclose(pac.exact_marginal_coverage(940, 1000, 0.1), EMC_940_1000_01, rel_tol=1e-12)
    with pytest.raises(ValueError):
        pac.exact_marginal_coverage(0, 10, 0.1)
    with pytest.raises(ValueError):
        pac.exact_marginal_coverage(11, 10, 0.1)


def test_exact_marginal_coverage_monte_carlo():
    # U_(940) of 1000 uniforms is Beta(940, 61); check P(U_(940) > 0.9)
    gen = np.random.Generator(np.random.Philox(81))
    draws = gen.beta(940.0, 61.0, 1_000_000)
    p_hat = float(np.mean(draws > 0.9))
    want = pac.exact_marginal_coverage(940, 1000, 0.1)
    sigma = math.sqrt(want * (1.0 - want) / 1_000_000)
    assert abs(p_hat - want) <= 3.0 * sigma + 1e-12


def test_residual_bound_identity_and_envelope(dw_band_100):
    alphas = np.linspace(0.05, 0.95, 91)
    curve = pac.simultaneous_thresholds(dw_band_100, alphas)
    slack, width, r = pac.residual_bound(dw_band_100, curve)
    ok = ~np.isnan(curve.j_alpha)
    assert np.all(slack[ok] >= -1e-15)
    np.testing.assert_allclose(r[ok], slack[ok] + width[ok], atol=1e-15)
    env = pac.residual_envelope(dw_band_100, curve)
    assert np.all(r[ok] <= env[ok] + 1e-12)


def test_residual_envelope_dkw_constant():
    s = np.arange(1, 201) / 201.0
    band = bands.dkw_band(s, 0.1)
    curve = pac.simultaneous_thresholds(band, np.linspace(0.2, 0.9, 8))
    env = pac.residual_envelope(band, curve)
    want = math.sqrt(2.0 * math.log(20.0) / 200.0) + 1.0 / 200.0
    np.testing.assert_allclose(env, want, rtol=1e-12)
    _, _, r = pac.residual_bound(band, curve)
    ok = ~np.isnan(curve.j_alpha)
    assert np.all(r[ok] <= env[ok])


def test_residual_envelope_rejects_other_methods():
    s = np.arange(1, 51) / 51.0
    band = bands.comparison_band(s, 0.1, "bjo", 2.0)
    curve = pac.simultaneous_thresholds(band, [0.3, 0.5])
    with pytest.raises(ValueError):
        pac.residual_envelope(band, curve)
    low = bands.dkw_band(s, 0.1, sided="lower-only")
    curve = pac.simultaneous_thresholds(low, [0.3, 0.5])
    with pytest.raises(ValueError):
        pac.residual_envelope(low, curve)


def test_restricted_curve_rejects_outside_levels(dw_kappa_100):
    s = np.arange(1, 101) / 101.0
    kap = bands.mc_quantile("dw", 100, 0.1, restriction=(0.0, 0.5), reps=5000, seed=82)
    band = bands.dw_band(s, 0.1, kap, restriction=(0.0, 0.5))
    with pytest.raises(ValueError):
        pac.simultaneous_thresholds(band, [0.7])
    curve = pac.simultaneous_thresholds(band, [0.1, 0.5])
    assert np.all(np.isfinite(curve.q_hat))


def test_ties_flag():
    band = bands.dkw_band(np.array([0.1, 0.2, 0.2, 0.7]), 0.1)
    curve = pac.simultaneous_thresholds(band, [0.5])
    assert curve.ties
    band2 = bands.dkw_band(np.array([0.1, 0.2, 0.4, 0.7]), 0.1)
    assert not pac.simultaneous_thresholds(band2, [0.5]).ties

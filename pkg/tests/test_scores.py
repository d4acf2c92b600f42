"""Score functions, data splitting, the randomized classification score and
its set-valued dual, and file round trips."""

import math

import numpy as np
import pytest

from simpac import scores


def test_split_data_sizes_and_partition():
    sp = scores.split_data(10, 0.5, seed=3)
    assert sp.cal_idx.size == 5 and sp.train_idx.size == 5
    all_idx = np.sort(np.concatenate([sp.train_idx, sp.cal_idx]))
    np.testing.assert_array_equal(all_idx, np.arange(10))
    again = scores.split_data(10, 0.5, seed=3)
    np.testing.assert_array_equal(sp.cal_idx, again.cal_idx)
    other = scores.split_data(10, 0.5, seed=4)
    assert not np.array_equal(sp.cal_idx, other.cal_idx)


def test_split_data_rounding_and_edges():
    assert scores.split_data(2, 0.5, seed=0).cal_idx.size == 1
    assert scores.split_data(101, 0.5, seed=0).cal_idx.size == 51  # round half up
    with pytest.raises(ValueError):
        scores.split_data(1, 0.5, seed=0)  # both halves must be nonempty
    with pytest.raises(ValueError):
        scores.split_data(10, 0.0, seed=0)


def test_density_score():
    got = scores.density_score(np.array([2.0, 0.5, 0.0]))
    np.testing.assert_array_equal(got, [0.5, 2.0, np.inf])
    with pytest.raises(ValueError):
        scores.density_score(np.array([0.2, -0.1]))


def test_dcp_score():
    got = scores.dcp_score(np.array([0.0, 0.5, 0.8, 1.0]))
    np.testing.assert_allclose(got, [0.5, 0.0, 0.3, 0.5])
    with pytest.raises(ValueError):
        scores.dcp_score(np.array([1.1]))


def test_score_set_from_values():
    ss = scores.ScoreSet.from_values([0.4, 0.1, 0.4])
    np.testing.assert_array_equal(ss.sorted_values, [0.1, 0.4, 0.4])
    assert ss.m == 3 and ss.has_ties
    assert not scores.ScoreSet.from_values([1.0, 2.0]).has_ties


def test_aps_quantile_L():
    pi = np.array([0.5, 0.3, 0.2])
    assert scores.aps_quantile_L(pi, 0.6) == 2
    assert scores.aps_quantile_L(pi, 0.5) == 1
    assert scores.aps_quantile_L(pi, 1.0) == 3
    uni = np.array([1 / 3, 1 / 3, 1 / 3])
    assert scores.aps_quantile_L(uni, 1.0) == 3


def test_aps_set_examples():
    pi = np.array([0.5, 0.3, 0.2])
    assert scores.aps_set(pi, 0.5, 0.6) == [0]
    assert scores.aps_set(pi, 0.7, 0.6) == [0, 1]
    assert scores.aps_set(pi, 0.3, 1.0) == [0, 1, 2]  # u < 1 keeps everything
    # tau below the top mass: the set can be empty when u clears the overshoot
    assert scores.aps_set(pi, 0.1, 0.2) == []
    assert scores.aps_set(pi, 0.9, 0.2) == [0]


def test_aps_score_examples():
    pi = np.array([0.5, 0.3, 0.2])
    assert math.isclose(scores.aps_score(pi, 1, 0.7), 0.59, rel_tol=1e-12)
    assert scores.aps_score(pi, 0, 1.0) == 0.0  # top label at u = 1 is free
    assert scores.aps_score(pi, 0, 0.0) == 0.5
    with pytest.raises(ValueError):
        scores.aps_score(pi, 3, 0.5)
    with pytest.raises(ValueError):
        scores.aps_score(pi, -1, 0.5)


def test_aps_duality():
    # y in set(tau) iff score(y) <= tau, off the measure-zero boundary
    gen = np.random.Generator(np.random.Philox(91))
    for _ in range(1000):
        c = int(gen.integers(2, 7))
        pi = gen.dirichlet(np.ones(c))
        u = float(gen.random())
        tau = float(gen.random())
        members = set(scores.aps_set(pi, u, tau))
        for y in range(c):
            sc = scores.aps_score(pi, y, u)
            if abs(sc - tau) < 1e-12:
                continue
            assert (y in members) == (sc <= tau), (pi, u, tau, y, sc)


def test_aps_sets_nested_in_tau():
    gen = np.random.Generator(np.random.Philox(92))
    for _ in range(200):
        pi = gen.dirichlet(np.ones(5))
        u = float(gen.random())
        s1 = set(scores.aps_set(pi, u, 0.3))
        s2 = set(scores.aps_set(pi, u, 0.6))
        s3 = set(scores.aps_set(pi, u, 0.95))
        assert s1 <= s2 <= s3


def test_aps_randomized_mass_is_exact():
    # E_U[pi(set)] = tau: the kept top-(L-1) mass plus the randomized atom
    gen = np.random.Generator(np.random.Philox(93))
    for _ in range(100):
        pi = gen.dirichlet(np.ones(6))
        tau = float(gen.uniform(0.01, 0.99))
        order = np.argsort(-pi, kind="stable")
        cum = np.cumsum(pi[order])
        L = scores.aps_quantile_L(pi, tau)
        t_l = cum[L - 1]
        v = (t_l - tau) / pi[order][L - 1]
        assert -1e-12 <= v <= 1.0 + 1e-12
        mean_mass = t_l - v * pi[order][L - 1]
        assert math.isclose(mean_mass, tau, rel_tol=0, abs_tol=1e-12)
    # Monte Carlo sanity on one case
    pi = np.array([0.4, 0.25, 0.2, 0.15])
    tau = 0.55
    us = np.random.Generator(np.random.Philox(94)).random(100_000)
    masses = np.array([pi[scores.aps_set(pi, float(u), tau)].sum() for u in us[:5000]])
    assert abs(masses.mean() - tau) <= 4.0 * masses.std(ddof=1) / math.sqrt(masses.size)


def test_aps_score_matches_grid_infimum():
    # score is the infimum threshold admitting the label
    gen = np.random.Generator(np.random.Philox(95))
    taus = np.linspace(1e-4, 1.0, 10_000)
    for _ in range(20):
        pi = gen.dirichlet(np.ones(4))
        u = float(gen.random())
        y = int(gen.integers(0, 4))
        sc = scores.aps_score(pi, y, u)
        member = np.array([y in scores.aps_set(pi, u, float(t)) for t in taus])
        if member.any():
            first = taus[member.argmax()]
            assert first >= sc - 1e-12  # never admitted below the score
            assert first - sc <= 1.5e-4  # admitted within one grid step above
        else:
            assert sc >= taus[-1] - 1.5e-4


def test_as_prob_vector_validation():
    with pytest.raises(ValueError):
        scores.as_prob_vector([1.0])  # needs at least two labels
    with pytest.raises(ValueError):
        scores.as_prob_vector([0.5, 0.4])  # must sum to 1
    with pytest.raises(ValueError):
        scores.as_prob_vector([1.2, -0.2])
    out = scores.as_prob_vector([0.25, 0.75])
    assert out.dtype == np.float64


def test_scores_file_round_trip(tmp_path):
    vals = np.array([0.5, 0.25, math.inf, 0.875])
    path = tmp_path / "scores.csv"
    scores.save_scores(vals, path)
    back = scores.load_scores(path)
    np.testing.assert_array_equal(np.sort(vals), back.sorted_values)
    assert back.m == 4

    bare = tmp_path / "bare.csv"
    bare.write_text("0.25\n0.5\n")
    assert scores.load_scores(bare).m == 2

    bad = tmp_path / "bad.csv"
    bad.write_text("score\n0.25\nhello\n")
    with pytest.raises(ValueError, match="3"):  # failing line number
        scores.load_scores(bad)


def test_prob_matrix_round_trip(tmp_path):
    path = tmp_path / "probs.csv"
    path.write_text("0.5,0.3,0.2\n0.1,0.1,0.8\n")
    mat = scores.load_prob_matrix(path)
    assert mat.shape == (2, 3)
    np.testing.assert_allclose(mat.sum(axis=1), 1.0)

    off = tmp_path / "off.csv"
    off.write_text("0.5,0.5000001\n0.5,0.5\n")  # inside tolerance, renormalized
    mat = scores.load_prob_matrix(off)
    np.testing.assert_allclose(mat.sum(axis=1), 1.0)

    bad = tmp_path / "bad.csv"
    bad.write_text("0.5,0.4\n")
    with pytest.raises(ValueError):
        scores.load_prob_matrix(bad)

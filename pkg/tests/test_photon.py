import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rpphoton.photon import (
    CountSeries,
    SkellamParams,
    delta_n_sampled,
    monte_carlo_counts,
    poisson_logpmf,
    poisson_sample,
    poisson_samples,
    sigma_delta_n,
    skellam_pmf,
    trial_rng,
)
from rpphoton.trajectory import BinnedExpectation


def brute_skellam(k, N1, N2, n_max=400):
    n = np.arange(n_max)
    return float(np.sum(stats.poisson.pmf(n + k, N1) * stats.poisson.pmf(n, N2)))


def binned_chisquare(samples, mean):
    """Chi-square p-value of samples against Poisson(mean), pooling sparse tails."""
    lo, hi = int(samples.min()), int(samples.max())
    ks = np.arange(lo, hi + 1)
    observed = np.bincount(samples - lo, minlength=len(ks)).astype(float)
    expected = np.exp(poisson_logpmf(ks, mean)) * len(samples)
    expected[0] += stats.poisson.cdf(lo - 1, mean) * len(samples)
    expected[-1] += stats.poisson.sf(hi, mean) * len(samples)
    groups, acc_o, acc_e = [], 0.0, 0.0
    for o, e in zip(observed, expected):
        acc_o, acc_e = acc_o + o, acc_e + e
        if acc_e >= 5:
            groups.append((acc_o, acc_e))
            acc_o = acc_e = 0.0
    if acc_e and groups:
        o, e = groups.pop()
        groups.append((o + acc_o, e + acc_e))
    obs, exp = np.array(groups).T
    return stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue


# -- Poisson -----------------------------------------------------------------

def test_zero_mean_gives_zero():
    rng = np.random.default_rng(0)
    assert poisson_sample(0.0, rng) == 0
    assert np.all(poisson_samples(np.zeros(100), rng) == 0)


def test_rejects_bad_means():
    rng = np.random.default_rng(0)
    for bad in (-1.0, np.nan, np.inf):
        with pytest.raises(ValueError):
            poisson_samples(np.array([bad]), rng)


def test_small_mean_moments():
    x = poisson_samples(np.full(1_000_000, 4.0), np.random.default_rng(1))
    assert abs(x.mean() - 4) < 0.01
    assert abs(x.var() - 4) < 0.05


def test_huge_mean_draw():
    mean = 2.212e11
    x = poisson_samples(np.full(1000, mean), np.random.default_rng(2))
    assert np.all(np.abs(x - mean) < 6 * np.sqrt(mean))
    assert abs(x.mean() - mean) < 4 * np.sqrt(mean / 1000)


@pytest.mark.parametrize("mean", [0.3, 4.5, 29.0, 30.0, 200.0, 5e4, 2e7])
def test_distribution_per_regime(mean):
    x = poisson_samples(np.full(200_000, mean), np.random.default_rng(int(mean * 10)))
    assert binned_chisquare(x, mean) > 1e-3


def test_mixed_means_keep_shape_and_order():
    means = np.array([[0.0, 2.0], [300.0, 3e7]])
    a = poisson_samples(means, np.random.default_rng(5))
    b = poisson_samples(means, np.random.default_rng(5))
    assert a.shape == (2, 2) and a.dtype == np.int64
    assert np.array_equal(a, b)
    assert a[0, 0] == 0


# -- Skellam -----------------------------------------------------------------

@pytest.mark.parametrize("N1, N2", [(1, 1), (3, 2), (0.5, 7), (30, 30), (12.5, 0.1)])
def test_skellam_matches_convolution(N1, N2):
    ks = np.arange(-20, 21)
    got = skellam_pmf(ks, SkellamParams(N1, N2))
    expected = np.array([brute_skellam(k, N1, N2) for k in ks])
    assert np.abs(got - expected).max() <= 1e-12


def test_skellam_examples():
    assert skellam_pmf(0, SkellamParams(1, 1)) == pytest.approx(0.308508322553671, abs=1e-14)
    assert skellam_pmf(3, SkellamParams(1, 0)) == pytest.approx(stats.poisson.pmf(3, 1), rel=1e-13)
    assert skellam_pmf(-3, SkellamParams(0, 1)) == pytest.approx(stats.poisson.pmf(3, 1), rel=1e-13)
    assert skellam_pmf(1, SkellamParams(0, 1)) == 0
    assert skellam_pmf(0, SkellamParams(0, 0)) == 1


def test_skellam_moments():
    ks = np.arange(-60, 61)
    p = skellam_pmf(ks, SkellamParams(3, 2))
    mean = np.sum(ks * p)
    assert mean == pytest.approx(1.0, abs=1e-10)
    assert np.sum((ks - mean) ** 2 * p) == pytest.approx(5.0, abs=1e-10)


@pytest.mark.parametrize("N1, N2", [(1, 1), (3, 2), (100, 80), (1e6, 9e5)])
def test_skellam_normalized(N1, N2):
    params = SkellamParams(N1, N2)
    half = int(40 * np.sqrt(N1 + N2)) + 40
    ks = np.arange(int(N1 - N2) - half, int(N1 - N2) + half + 1)
    assert skellam_pmf(ks, params).sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    k=st.integers(-200, 200),
    N1=st.floats(0.01, 1e5),
    N2=st.floats(0.01, 1e5),
)
def test_skellam_symmetry(k, N1, N2):
    a = skellam_pmf(k, SkellamParams(N1, N2))
    b = skellam_pmf(-k, SkellamParams(N2, N1))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_skellam_rejects_bad_input():
    with pytest.raises(ValueError):
        SkellamParams(-1, 2)
    with pytest.raises(ValueError):
        skellam_pmf(0.5, SkellamParams(1, 1))


def test_sampled_differences_follow_skellam():
    rng = np.random.default_rng(17)
    N1, N2 = 50.0, 40.0
    n = 1_000_000
    d = poisson_samples(np.full(n, N1), rng) - poisson_samples(np.full(n, N2), rng)
    lo, hi = d.min(), d.max()
    ks = np.arange(lo, hi + 1)
    observed = np.bincount(d - lo).astype(float)
    expected = skellam_pmf(ks, SkellamParams(N1, N2)) * n
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], n - expected[keep].sum())
    assert stats.chisquare(obs, exp).pvalue > 1e-3


# -- delta n -----------------------------------------------------------------

def test_sigma_examples():
    s = sigma_delta_n(800, 800)
    assert s.exact == pytest.approx(0.05)
    assert s.simplified == pytest.approx(0.05)
    assert sigma_delta_n(800, 400).exact == pytest.approx(0.04330, abs=1e-5)
    assert sigma_delta_n(1, 0).exact == 1.0
    with pytest.raises(ValueError):
        sigma_delta_n(0, 5)


@settings(max_examples=50, deadline=None)
@given(N=st.floats(1.0, 1e12), c=st.floats(1.5, 100))
def test_sigma_scales_as_inverse_root(N, c):
    ratio = sigma_delta_n(N, N).exact / sigma_delta_n(c * N, c * N).exact
    assert ratio == pytest.approx(np.sqrt(c), rel=1e-12)


def test_delta_n_sampled_examples():
    c = CountSeries(np.arange(3.0), np.array([100.0, 100.0]), np.array([90, 120]))
    assert delta_n_sampled(c)[0] == pytest.approx(0.30)
    c = CountSeries(np.arange(3.0), np.array([0.0, 3.0]), np.array([0, 2]))
    assert np.isnan(delta_n_sampled(c)[0])
    with pytest.raises(ValueError):
        CountSeries(np.arange(3.0), np.array([1.0, 1.0]), np.array([1, -1]))
    with pytest.raises(ValueError):
        CountSeries(np.arange(4.0), np.array([1.0, 1.0]), np.array([1, 1]))


def test_delta_n_spread_matches_sigma():
    N = 800.0
    trials = 100_000
    rng = trial_rng(3, 0)
    n = poisson_samples(np.full((trials, 2), N), rng)
    dn = (n[:, 1] - n[:, 0]) / N
    sigma = sigma_delta_n(N, N).exact
    assert dn.std(ddof=1) == pytest.approx(sigma, rel=0.02)
    assert abs(dn.mean()) < 5 * sigma / np.sqrt(trials)


def test_monte_carlo_counts():
    bins = BinnedExpectation(np.arange(6.0), np.array([50.0, 50.0, 0.0, 50.0, 50.0]))
    series = monte_carlo_counts(bins, 400, seed=8)
    assert len(series) == 400
    assert [s.trial for s in series[:3]] == [0, 1, 2]
    pooled = np.stack([s.sampled for s in series])
    assert np.all(pooled[:, 2] == 0)
    assert abs(pooled[:, [0, 1, 3, 4]].mean() - 50) < 4 * np.sqrt(50 / 1600)
    again = monte_carlo_counts(bins, 400, seed=8)
    assert all(np.array_equal(a.sampled, b.sampled) for a, b in zip(series, again))
    other = monte_carlo_counts(bins, 2, seed=9)
    assert not np.array_equal(other[0].sampled, series[0].sampled)
    with pytest.raises(ValueError):
        monte_carlo_counts(bins, 0, seed=8)


def test_trial_streams_are_independent_of_trial_count():
    assert trial_rng(5, 3).random() == trial_rng(5, 3).random()
    assert trial_rng(5, 3).random() != trial_rng(5, 4).random()

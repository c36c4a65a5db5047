import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gigchar.core import GigParams, scale_score
from gigchar.errors import GigDomainError, SampleSizeError
from gigchar.estimation import (
    SummaryStats,
    eta_mle,
    fit_gig,
    log_likelihood,
    profile_likelihood,
    profile_score,
)
from gigchar.sampling import SeedPlan, sample_gig

samples_st = st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=60).filter(lambda v: max(v) > min(v) * (1 + 1e-9))


def test_summary_stats():
    s = SummaryStats.from_sample([1.0, 2.0, 4.0])
    assert s.mean == pytest.approx(7 / 3) and s.mean_inv == pytest.approx(7 / 12)
    assert s.mean * s.mean_inv >= 1
    with pytest.raises(SampleSizeError):
        SummaryStats.from_sample([])
    with pytest.raises(GigDomainError):
        SummaryStats.from_sample([1.0, -1.0])
    with pytest.raises(GigDomainError):
        SummaryStats(2.0, 0.1, 0.0, 3)


def test_eta_mle_examples():
    s = SummaryStats.from_sample([0.5, 1.5, 3.0, 0.2])
    assert eta_mle(s, 0.0, 1.7) == pytest.approx(math.sqrt(s.mean / s.mean_inv), rel=1e-14)
    c, p, theta = 2.5, 0.8, 1.3
    const = SummaryStats.from_sample([c] * 5)
    with pytest.warns(RuntimeWarning):
        eta, flag = eta_mle(const, p, theta, return_flag=True)
    assert flag and eta == pytest.approx(c * (math.sqrt(p * p + theta * theta) - p) / theta, rel=1e-14)
    with pytest.raises(GigDomainError):
        eta_mle(s, 0.0, 0.0)


@settings(max_examples=80, deadline=None)
@given(samples_st, st.floats(-5, 5), st.floats(0.05, 20))
def test_score_root(values, p, theta):
    x = np.array(values)
    eta = eta_mle(SummaryStats.from_sample(x), p, theta)
    scale = np.abs(scale_score(p, theta, x / eta)).sum() + 1.0
    assert abs(profile_score(x, p, theta, eta)) <= 1e-9 * scale


@settings(max_examples=60, deadline=None)
@given(samples_st, st.floats(-5, 5), st.floats(0.05, 20), st.floats(1e-3, 1e3))
def test_scale_equivariance(values, p, theta, s):
    x = np.array(values)
    e1 = eta_mle(SummaryStats.from_sample(x), p, theta)
    e2 = eta_mle(SummaryStats.from_sample(s * x), p, theta)
    assert e2 == pytest.approx(s * e1, rel=1e-13)


def test_eta_matches_grid_argmax():
    d, theta, eta = 1.5, 1.2, 2.0
    params = GigParams.from_theta_eta(1.0 * d, theta * d, eta)
    x = sample_gig(params, 10_000, SeedPlan(3)).values
    e = eta_mle(SummaryStats.from_sample(x), params.p, params.theta)
    grid = np.linspace(0.5 * e, 1.5 * e, 10_001)
    table = profile_likelihood(x, params.p, params.theta, grid)
    best = grid[int(np.argmax([ll for _, ll in table]))]
    assert abs(best - e) <= grid[1] - grid[0]
    ll = np.array([v for _, v in table])
    k = int(np.argmax(ll))
    assert np.all(np.diff(ll[: k + 1]) > 0) and np.all(np.diff(ll[k:]) < 0)
    # exact grid point at the estimate is the argmax
    fine = np.unique(np.append(grid[::100], e))
    assert fine[int(np.argmax([v for _, v in profile_likelihood(x, params.p, params.theta, fine)]))] == e


def test_lognormal_differs_from_formula():
    # recorded smoke test: for a lognormal scale family the formula is not the MLE
    x = np.exp(np.random.default_rng(0).normal(0.0, 0.8, 5000))
    e = eta_mle(SummaryStats.from_sample(x), 1.0, 1.0)
    # lognormal scale MLE is exp(mean log x)
    assert abs(e / np.exp(np.log(x).mean()) - 1) > 0.05


def test_profile_likelihood_validation():
    with pytest.raises(GigDomainError):
        profile_likelihood([1.0, 2.0, 3.0], 0.0, 1.0, [2.0, 1.0])
    with pytest.raises(GigDomainError):
        profile_likelihood([1.0, 2.0, 3.0], 0.0, 1.0, [0.0, 1.0])


def test_profile_likelihood_matches_direct_sum():
    from gigchar import core
    x = np.array([0.3, 1.1, 2.5, 4.0])
    (eta, ll), = profile_likelihood(x, 0.4, 1.3, [1.7])
    assert ll == pytest.approx(core.log_density(GigParams.from_theta_eta(0.4, 1.3, 1.7), x).sum(), rel=1e-13)


def test_ig_closed_form():
    mu, lam = 2.0, 3.0
    params = GigParams.inverse_gaussian(lam / mu ** 2, lam)
    fit = fit_gig(sample_gig(params, 100_000, SeedPlan(5)), mode="ig")
    assert abs(fit.extra["mu"] - mu) <= 4 * fit.standard_errors["mu"]
    assert abs(fit.extra["lambda"] - lam) <= 4 * fit.standard_errors["lambda"]
    assert fit.params.p == -0.5


def test_full_fit_recovers_parameters():
    params = GigParams(0.7, 2.0, 3.0)
    fit = fit_gig(sample_gig(params, 100_000, SeedPlan(6)), standard_errors=True)
    assert fit.converged and fit.gradient_norm <= 1e-6 and fit.branch == "gig"
    se = fit.standard_errors
    assert abs(fit.params.p - 0.7) <= 4 * se["p"]
    assert abs(fit.params.theta - params.theta) <= 4 * se["theta"]
    assert abs(fit.params.eta - params.eta) <= 4 * se["eta"]


def test_fit_is_likelihood_maximum():
    x = sample_gig(GigParams(-1.2, 1.0, 2.0), 5000, SeedPlan(7))
    fit = fit_gig(x)
    stats = SummaryStats.from_sample(x)
    best = log_likelihood(stats, fit.params)
    assert best == pytest.approx(fit.log_likelihood, rel=1e-12)
    for dp, dt in ((0.01, 0), (-0.01, 0), (0, 0.01), (0, -0.01)):
        other = GigParams.from_theta_eta(fit.params.p + dp, fit.params.theta * (1 + dt), fit.params.eta)
        assert log_likelihood(stats, other) < best


def test_fixed_p_fit():
    params = GigParams(1.5, 1.0, 2.0)
    fit = fit_gig(sample_gig(params, 50_000, SeedPlan(8)), mode="fixed-p", p=1.5)
    assert fit.params.p == 1.5 and fit.gradient_norm <= 1e-6
    assert fit.params.theta == pytest.approx(params.theta, rel=0.05)
    with pytest.raises(GigDomainError):
        fit_gig([1.0, 2.0, 3.0], mode="fixed_p")


def test_exponential_boundary():
    x = sample_gig(GigParams(1.0, 2.0, 0.0), 10_000, SeedPlan(9))
    fit = fit_gig(x, mode="fixed_p", p=1.0)
    assert fit.boundary and fit.branch == "gamma"
    assert fit.params.a / 2 == pytest.approx(1 / x.values.mean(), rel=1e-12)


def test_reciprocal_gamma_boundary():
    x = 1.0 / sample_gig(GigParams(2.5, 3.0, 0.0), 20_000, SeedPlan(10)).values
    fit = fit_gig(x)
    assert fit.boundary and fit.branch == "reciprocal_gamma"
    assert fit.params.p == pytest.approx(-2.5, rel=0.05)


def test_fit_errors():
    with pytest.raises(SampleSizeError):
        fit_gig([1.0, 2.0])
    with pytest.raises(GigDomainError):
        fit_gig([2.0, 2.0, 2.0])
    with pytest.raises(GigDomainError):
        fit_gig([1.0, 2.0, 3.0], mode="bayes")


def test_fit_result_dict():
    fit = fit_gig(sample_gig(GigParams(0.7, 2.0, 3.0), 2000, SeedPlan(1)))
    d = fit.as_dict()
    assert set(d) >= {"params", "log_likelihood", "convergence", "theta", "eta"}

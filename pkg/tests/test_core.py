import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from gigchar import core
from gigchar.core import GammaParams, GigParams
from gigchar.errors import GigDomainError, NonFiniteMomentError

P073 = GigParams(0.7, 2.0, 3.0)
IG11 = GigParams.inverse_gaussian(1.0, 1.0)

# frozen from 30-digit mpmath quadrature
DENSITY_073_AT_1_5 = 0.43752369734215926
CDF_073_AT_1_5 = 0.46657486052632484
MEAN_073 = 1.8426892959986263
ENTROPY_073 = 1.323799880429416
ENTROPY_IG11 = 0.87694560787233886
MEAN_LOG_IG11 = -0.36132861688822258

params_st = st.builds(
    GigParams.from_theta_eta,
    st.floats(-4, 4),
    st.floats(0.2, 8),
    st.floats(0.3, 3),
)


def test_params_validation():
    with pytest.raises(GigDomainError):
        GigParams(1.0, -1.0, 1.0)
    with pytest.raises(GigDomainError):
        GigParams(1.0, 0.0, 0.0)
    with pytest.raises(GigDomainError):
        GigParams(-1.0, 2.0, 0.0)
    with pytest.raises(GigDomainError):
        GigParams(1.0, 0.0, 2.0)
    with pytest.raises(GigDomainError):
        GigParams(math.inf, 1.0, 1.0)
    assert GigParams(1.0, 2.0, 0.0).branch == core.GAMMA
    assert GigParams(-1.0, 0.0, 2.0).branch == core.RECIPROCAL_GAMMA
    with pytest.raises(GigDomainError):
        GigParams(1.0, 2.0, 0.0).eta


def test_theta_eta_roundtrip():
    p = GigParams.from_theta_eta(0.3, 2.0, 0.5)
    assert (p.a, p.b) == (4.0, 1.0)
    assert p.theta == pytest.approx(2.0) and p.eta == pytest.approx(0.5)
    assert GammaParams(2.0, 0.5).to_gig() == GigParams(2.0, 1.0, 0.0)


def test_density_examples():
    assert core.density(IG11, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    assert core.density(GigParams(1.0, 2.0, 0.0), 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    assert core.density(P073, 1.5) == pytest.approx(DENSITY_073_AT_1_5, rel=1e-13)
    with pytest.raises(GigDomainError):
        core.density(P073, 0.0)


def test_reciprocal_gamma_density():
    # 1/X with X ~ Gamma(2, rate 1.5)
    rg = GigParams(-2.0, 0.0, 3.0)
    x = 0.8
    expected = 1.5 ** 2 * x ** -3 * math.exp(-1.5 / x)
    assert core.density(rg, x) == pytest.approx(expected, rel=1e-14)


def test_normalization_by_quadrature():
    for params in (P073, IG11, GigParams(3.0, 1.0, 0.5), GigParams(-2.0, 0.2, 8.0)):
        total, _ = integrate.quad(lambda x: core.density(params, x), 0, np.inf, limit=200)
        assert total == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(params_st, st.floats(0.01, 30))
def test_parameterizations_agree(params, x):
    assert core.density_theta_eta(params.p, params.theta, params.eta, x) == pytest.approx(
        core.density(params, x), rel=1e-12
    )


def test_cdf_examples():
    assert core.cdf(P073, 1.5) == pytest.approx(CDF_073_AT_1_5, abs=1e-13)
    med = core.quantile(P073, 0.5)
    assert core.cdf(P073, med) == pytest.approx(0.5, abs=1e-13)
    q9 = core.quantile(IG11, 0.9)
    assert core.cdf(IG11, q9) == pytest.approx(0.9, abs=1e-8)
    assert core.cdf(P073, 1.5) + core.sf(P073, 1.5) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(GigDomainError):
        core.quantile(P073, 1.0)
    with pytest.raises(GigDomainError):
        core.quantile(P073, 0.0)


def test_cdf_limits_and_monotone():
    x = np.geomspace(1e-4, 1e3, 500)
    f = core.cdf(P073, x)
    assert np.all(np.diff(f) >= 0)
    assert f[0] < 1e-12 and f[-1] == pytest.approx(1.0, abs=1e-14)


def test_cdf_gamma_branches():
    g = GigParams(1.0, 2.0, 0.0)
    assert core.cdf(g, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-14)
    rg = GigParams(-1.0, 0.0, 2.0)  # 1/X ~ Exp(1)
    assert core.cdf(rg, 2.0) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert core.quantile(g, 0.3) == pytest.approx(-math.log(0.7), rel=1e-13)
    assert core.quantile(rg, 0.3) == pytest.approx(1 / -math.log(0.3), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(params_st, st.floats(1e-6, 1 - 1e-6))
def test_quantile_roundtrip(params, q):
    x = core.quantile(params, q)
    assert core.quantile(params, core.cdf(params, x)) == pytest.approx(x, rel=1e-8)


def test_cdf_normalization_error_small():
    for p in (-2, -0.5, 0, 0.5, 1, 3):
        for theta in (0.2, 1, 5):
            assert core.cdf_normalization_error(GigParams.from_theta_eta(p, theta, 1.0)) < 1e-12


def test_moments():
    assert core.moment(P073, 0) == 1.0
    assert core.moment(P073, 1) == pytest.approx(MEAN_073, rel=1e-13)
    m1, mi = core.moment(P073, 1), core.moment(P073, -1)
    assert 0.5 * P073.a * m1 - 0.5 * P073.b * mi == pytest.approx(P073.p, abs=1e-12)
    g = GigParams(2.0, 2.0, 0.0)
    assert core.moment(g, 1) == pytest.approx(2.0)
    assert core.moment(g, -1) == pytest.approx(1.0)
    with pytest.raises(NonFiniteMomentError):
        core.moment(g, -2)
    with pytest.raises(NonFiniteMomentError):
        core.moment(GigParams(-1.0, 0.0, 2.0), 1)


@settings(max_examples=60, deadline=None)
@given(params_st)
def test_moment_score_identity(params):
    m1, mi = core.moment(params, 1), core.moment(params, -1)
    lhs = 0.5 * params.a * m1 - 0.5 * params.b * mi
    assert lhs == pytest.approx(params.p, abs=1e-9 * max(1, 0.5 * params.a * m1))


def test_reciprocal_examples():
    assert core.reciprocal(GigParams(-0.5, 2.0, 3.0)) == GigParams(0.5, 3.0, 2.0)
    assert core.reciprocal(GigParams(0.0, 1.5, 1.5)) == GigParams(0.0, 1.5, 1.5)


@settings(max_examples=40, deadline=None)
@given(params_st, st.lists(st.floats(0.02, 40), min_size=1, max_size=100))
def test_reciprocal_change_of_variables(params, xs):
    x = np.array(xs)
    r = core.reciprocal(params)
    assert core.reciprocal(r) == params
    np.testing.assert_allclose(core.density(r, 1 / x) * x ** -2, core.density(params, x), rtol=1e-11)


def test_scale_score_examples():
    assert core.scale_score(0.0, 2.0, 1.0) == 0.0
    assert core.scale_score(1.0, 1.0, 2.0) == pytest.approx(0.25)
    p, theta = 0.8, 1.7
    root = (p + math.sqrt(p * p + theta * theta)) / theta
    assert core.scale_score(p, theta, root) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(GigDomainError):
        core.scale_score(0.0, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 10), st.floats(0.01, 10), st.floats(0.01, 10))
def test_scale_score_decreasing(p, theta, x, y):
    if x < y:
        assert core.scale_score(p, theta, x) > core.scale_score(p, theta, y)


def test_mode_is_density_maximum():
    for params in (P073, IG11, GigParams(3.0, 1.0, 0.5)):
        m = core.mode(params)
        assert core.log_density(params, m) >= core.log_density(params, m * (1 + 1e-4))
        assert core.log_density(params, m) >= core.log_density(params, m * (1 - 1e-4))


def _entropy_quad(params):
    f = lambda x: -core.density(params, x) * core.log_density(params, x) if core.density(params, x) > 0 else 0.0
    return integrate.quad(f, 0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)[0]


def test_entropy_matches_quadrature():
    assert core.entropy(P073) == pytest.approx(ENTROPY_073, abs=1e-8)
    assert core.entropy(IG11) == pytest.approx(ENTROPY_IG11, abs=1e-8)
    assert core.entropy(IG11) == pytest.approx(_entropy_quad(IG11), abs=1e-8)
    for params in (GigParams(2.0, 2.0, 0.0), GigParams(-3.0, 0.0, 1.0)):
        assert core.entropy(params) == pytest.approx(_entropy_quad(params), abs=1e-8)


def test_entropy_of_reciprocal():
    assert core.mean_log(IG11) == pytest.approx(MEAN_LOG_IG11, abs=1e-9)
    for params in (P073, IG11, GigParams(-2.3, 0.4, 5.0)):
        gap = core.entropy(core.reciprocal(params)) - core.entropy(params)
        assert gap == pytest.approx(-2.0 * core.mean_log(params), abs=1e-8)


def test_kawamura_ig_closed_form():
    for a, b in ((1.0, 1.0), (0.3, 4.0), (5.0, 0.2)):
        _, spread = core.kawamura_targets(GigParams.inverse_gaussian(a, b))
        assert spread == pytest.approx(2 + 1 / math.sqrt(a * b), abs=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gigchar.errors import BesselOverflowError, GigDomainError, NumericalDerivativeError
from gigchar.special import (
    BesselEvalConfig,
    bessel_k,
    bessel_k_dlog_dorder,
    bessel_k_dlog_dorder_quadrature,
    bessel_k_quadrature,
    bessel_k_ratio,
    log_bessel_k,
    log_bessel_k_quadrature,
)

# frozen from a 30-digit mpmath quadrature of the integral representation
K_2_7_AT_3_1 = 0.083986155466544805
RATIO_1_3_AT_0_8 = 3.7665221896071227
DLOG_0_7_AT_1_2 = 0.43512558184154332
DLOG_1_AT_2 = 0.40715387938189474


def test_half_order_closed_form():
    assert bessel_k(0.5, 1.0).value == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-14)
    assert bessel_k(-0.5, 2.0).value == pytest.approx(math.sqrt(math.pi / 4) * math.exp(-2), rel=1e-14)


def test_derived_value_and_oracle():
    assert bessel_k(2.7, 3.1).value == pytest.approx(K_2_7_AT_3_1, rel=1e-13)
    value, err = bessel_k_quadrature(2.7, 3.1)
    assert value == pytest.approx(K_2_7_AT_3_1, rel=1e-12)
    assert 0 <= err < 1e-12


def test_ratio_examples():
    assert bessel_k_ratio(-0.5, 1.7) == pytest.approx(1.0, rel=1e-14)
    assert bessel_k_ratio(0.5, 2.0) == pytest.approx(1.5, rel=1e-14)
    assert bessel_k_ratio(1.3, 0.8) == pytest.approx(RATIO_1_3_AT_0_8, rel=1e-12)


def test_dlog_examples():
    assert abs(bessel_k_dlog_dorder(0.0, 3.0)) < 1e-8
    assert bessel_k_dlog_dorder(1.0, 2.0) == pytest.approx(-bessel_k_dlog_dorder(-1.0, 2.0), abs=1e-9)
    assert bessel_k_dlog_dorder(0.7, 1.2) == pytest.approx(DLOG_0_7_AT_1_2, abs=1e-8)
    assert bessel_k_dlog_dorder(1.0, 2.0) == pytest.approx(DLOG_1_AT_2, abs=1e-8)
    assert bessel_k_dlog_dorder_quadrature(0.7, 1.2) == pytest.approx(DLOG_0_7_AT_1_2, abs=1e-11)


@pytest.mark.parametrize("z", [0.5, 1.0, 5.0, 20.0])
def test_dlog_vanishes_at_zero_order(z):
    assert abs(bessel_k_dlog_dorder(0.0, z)) < 1e-8


def test_domain_errors():
    with pytest.raises(GigDomainError):
        bessel_k(1.0, 0.0)
    with pytest.raises(GigDomainError):
        bessel_k(1.0, -2.0)
    with pytest.raises(GigDomainError):
        log_bessel_k(np.nan, 1.0)
    with pytest.raises(GigDomainError):
        BesselEvalConfig(rel_tolerance=0.0)
    with pytest.raises(GigDomainError):
        BesselEvalConfig(quadrature_max_nodes=10)


def test_overflow_points_to_log_scale():
    with pytest.raises(BesselOverflowError):
        bessel_k(300.0, 0.5)
    # 30-digit mpmath value
    assert log_bessel_k(300.0, 0.5) == pytest.approx(1824.397019595791, rel=1e-13)
    assert log_bessel_k_quadrature(300.0, 0.5)[0] == pytest.approx(1824.397019595791, rel=1e-12)


def test_log_bessel_underflow_branch():
    # K_0(800) underflows in double precision but its log does not (mpmath value)
    assert log_bessel_k(0.0, 800.0) == pytest.approx(-803.1166706636599, rel=1e-13)


def test_derivative_step_underflow():
    cfg = BesselEvalConfig(order_derivative_step=1e-300)
    with pytest.raises(NumericalDerivativeError):
        bessel_k_dlog_dorder(1e10, 2.0, cfg)


def test_vectorized_log_matches_scalar():
    ps = np.linspace(-5, 5, 11)
    out = log_bessel_k(ps, 1.5)
    for p, v in zip(ps, out):
        assert v == log_bessel_k(float(p), 1.5)


@settings(max_examples=60, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 50))
def test_symmetry_in_order(p, z):
    assert bessel_k(-p, z).value == pytest.approx(bessel_k(p, z).value, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-9, 9), st.floats(0.1, 50))
def test_three_term_recurrence(p, z):
    lhs = bessel_k(p + 1, z).value - bessel_k(p - 1, z).value
    rhs = 2 * p / z * bessel_k(p, z).value
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10 * bessel_k(p + 1, z).value)


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 50))
def test_ratio_is_ratio(p, z):
    assert bessel_k_ratio(p, z) == pytest.approx(
        bessel_k(p + 1, z).value / bessel_k(p, z).value, rel=1e-13
    )


@settings(max_examples=25, deadline=None)
@given(st.floats(-8, 8), st.floats(0.2, 30))
def test_dlog_antisymmetric_and_matches_oracle(p, z):
    d = bessel_k_dlog_dorder(p, z)
    assert d == pytest.approx(-bessel_k_dlog_dorder(-p, z), abs=1e-8)
    assert d == pytest.approx(bessel_k_dlog_dorder_quadrature(p, z), abs=1e-8)


def test_error_estimate_nonnegative():
    bv = bessel_k(4.3, 0.7)
    assert bv.estimated_error >= 0
    assert bv.estimated_error < 1e-12 * bv.value

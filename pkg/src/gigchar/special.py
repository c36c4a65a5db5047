"""Modified Bessel function of the third kind, K_p(z), for real order and z > 0.

Production values come from the AMOS routines wrapped by ``scipy.special``
(``kv``/``kve``), with an upward ratio recurrence in order as the log-scale
fallback when the exponentially scaled value overflows.  The integral
representation

    K_p(z) = 2^(-p-1) z^p  int_0^inf x^(-p-1) exp(-x - z^2/(4x)) dx

is evaluated by adaptive quadrature in ``bessel_k_quadrature`` and serves as
an independent oracle; nothing on the production path calls it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import BesselOverflowError, GigDomainError, NumericalDerivativeError

_EPS = np.finfo(float).eps
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BesselEvalConfig:
    rel_tolerance: float = 1e-12
    quadrature_max_nodes: int = 4200
    order_derivative_step: float = 1e-5

    def __post_init__(self):
        if not self.rel_tolerance > 0:
            raise GigDomainError("rel_tolerance must be positive")
        if self.quadrature_max_nodes < 64:
            raise GigDomainError("quadrature_max_nodes must be at least 64")
        if not self.order_derivative_step > 0:
            raise GigDomainError("order_derivative_step must be positive")


DEFAULT_CONFIG = BesselEvalConfig()


@dataclass(frozen=True)
class BesselValue:
    order: float
    argument: float
    value: float
    estimated_error: float


def _check_argument(z):
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)) or np.any(~np.isfinite(z)):
        raise GigDomainError("K_p(z) requires a finite argument z > 0")
    return z


def _check_order(p):
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)):
        raise GigDomainError("order must be finite")
    # AMOS returns nan for subnormal orders; K_p is even and smooth in p, so
    # flushing them to zero costs O(p^2)
    return np.where(np.abs(p) < 1e-300, 0.0, p)


def _log_kv_upward(nu, z):
    """log K_nu(z) for nu >= 0 by upward recurrence on r = K_{mu+1}/K_mu."""
    n = int(math.floor(nu))
    mu = nu - n
    k0 = special.kve(mu, z)
    total = math.log(k0) - z
    r = special.kve(mu + 1.0, z) / k0
    for j in range(n):
        total += math.log(r)
        r = 1.0 / r + 2.0 * (mu + j + 1.0) / z
    return total


def log_bessel_k(order, argument):
    """log K_p(z), elementwise; never overflows for z in the normal range."""
    p = np.abs(_check_order(order))
    z = _check_argument(argument)
    p, z = np.broadcast_arrays(p, z)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.log(special.kve(p, z)) - z
    out = np.atleast_1d(np.array(out, dtype=float))
    p, z = np.atleast_1d(p), np.atleast_1d(z)
    bad = ~np.isfinite(out)
    if np.any(bad):
        for idx in zip(*np.nonzero(bad)):
            out[idx] = _log_kv_upward(float(p[idx]), float(z[idx]))
    if np.ndim(order) == 0 and np.ndim(argument) == 0:
        return float(out[0])
    return out


def bessel_k(order, argument, config=DEFAULT_CONFIG):
    """Evaluate K_p(z) with an error estimate.

    The estimate is the disagreement with an independent evaluation by
    upward recurrence from the fractional part of the order, floored at a
    few ulps.
    """
    p = float(_check_order(order))
    z = float(_check_argument(argument))
    with np.errstate(over="ignore"):
        value = float(special.kv(p, z))
    if not np.isfinite(value) or value <= 0.0:
        raise BesselOverflowError(
            f"K_{p}({z}) is outside double range; evaluate log_bessel_k instead"
        )
    err = 4.0 * _EPS * value
    if abs(p) >= 1.0:
        alt = math.exp(_log_kv_upward(abs(p), z))
        err = max(err, abs(alt - value))
    if err > config.rel_tolerance * value:
        warnings.warn(
            f"estimated relative error {err / value:.2e} of K_{p}({z}) exceeds "
            f"rel_tolerance={config.rel_tolerance:.1e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return BesselValue(order=p, argument=z, value=value, estimated_error=err)


def bessel_k_ratio(order, argument):
    """K_{p+1}(z) / K_p(z)."""
    p = _check_order(order)
    z = _check_argument(argument)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = special.kve(p + 1.0, z) / special.kve(p, z)
    ratio = np.asarray(ratio, dtype=float)
    bad = ~(np.isfinite(ratio) & (ratio > 0))
    if np.any(bad):
        pb, zb = np.broadcast_arrays(p, z)
        fallback = np.exp(log_bessel_k(pb + 1.0, zb) - log_bessel_k(pb, zb))
        ratio = np.where(bad, fallback, ratio)
    if ratio.ndim == 0:
        return float(ratio)
    return ratio


def bessel_k_dlog_dorder(order, argument, config=DEFAULT_CONFIG):
    """d/dp log K_p(z) by Richardson-extrapolated central differences.

    The step is ``config.order_derivative_step * max(1, |p|)``; two levels
    (h and h/2) cancel the h^2 truncation term.
    """
    p = float(_check_order(order))
    z = float(_check_argument(argument))
    h = config.order_derivative_step * max(1.0, abs(p))
    if p + 0.5 * h == p or p - 0.5 * h == p:
        raise NumericalDerivativeError(f"order step {h:g} underflows at p={p:g}")

    def central(step):
        hi = log_bessel_k(p + step, z)
        lo = log_bessel_k(p - step, z)
        return (hi - lo) / (2.0 * step)

    d1 = central(h)
    d2 = central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


# --------------------------------------------------------------------------
# quadrature oracle


def _integral_setup(p, z):
    c = 0.25 * z * z
    root = math.hypot(p, z)
    # e^{s*} solves e^{2s} + p e^s - c = 0
    es = 2.0 * c / (p + root) if p > 0 else 0.5 * (root - p)
    s_star = math.log(es)

    def phi(s):
        return -p * s - np.exp(s) - c * np.exp(-s)

    phi_star = phi(s_star)
    curvature = es + c / es
    width = 1.0 / math.sqrt(curvature)

    def edge(direction):
        d = width
        while phi_star - phi(s_star + direction * d) < 60.0:
            d *= 2.0
        return s_star + direction * d

    return phi, s_star, phi_star, edge(-1.0), edge(1.0)


def _quad_pieces(fn, pieces, limit):
    total, err = 0.0, 0.0
    for lo, hi in pieces:
        val, e = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=1e-13, limit=limit)
        total += val
        err += e
    return total, err


def log_bessel_k_quadrature(order, argument, max_nodes=DEFAULT_CONFIG.quadrature_max_nodes):
    """log K_p(z) from the integral representation; returns (value, abs_error)."""
    p = float(_check_order(order))
    z = float(_check_argument(argument))
    phi, s_star, phi_star, lo, hi = _integral_setup(p, z)
    limit = max(1, max_nodes // 21)
    pieces = [(lo, s_star), (s_star, hi)]
    mass, err = _quad_pieces(lambda s: math.exp(phi(s) - phi_star), pieces, limit)
    log_k = -(p + 1.0) * _LOG2 + p * math.log(z) + phi_star + math.log(mass)
    return log_k, err / mass


def bessel_k_quadrature(order, argument, max_nodes=DEFAULT_CONFIG.quadrature_max_nodes):
    """K_p(z) from the integral representation; returns (value, abs_error)."""
    log_k, rel_err = log_bessel_k_quadrature(order, argument, max_nodes)
    value = math.exp(log_k)
    return value, rel_err * value


def bessel_k_dlog_dorder_quadrature(order, argument,
                                    max_nodes=DEFAULT_CONFIG.quadrature_max_nodes):
    """d/dp log K_p(z) by differentiating under the integral sign.

    With x = e^s the integral becomes a log-concave weight w(s), and
    d/dp log K_p(z) = log(z/2) - E_w[s].
    """
    p = float(_check_order(order))
    z = float(_check_argument(argument))
    phi, s_star, phi_star, lo, hi = _integral_setup(p, z)
    limit = max(1, max_nodes // 21)
    pieces = [(lo, s_star), (s_star, hi)]
    mass, _ = _quad_pieces(lambda s: math.exp(phi(s) - phi_star), pieces, limit)
    # centre s at the mode so the first moment integral has no large offset
    first, _ = _quad_pieces(
        lambda s: (s - s_star) * math.exp(phi(s) - phi_star), pieces, limit
    )
    return math.log(0.5 * z) - (s_star + first / mass)

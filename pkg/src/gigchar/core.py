"""GIG parameterizations and distribution functions.

Two equivalent densities are implemented.  In the (p, a, b) form

    f(x) = (a/b)^(p/2) / (2 K_p(sqrt(ab))) x^(p-1) exp(-(a x + b/x)/2),

and with theta = sqrt(ab) (concentration) and eta = sqrt(b/a) (scale)

    f(x) = 1/(2 eta K_p(theta)) (x/eta)^(p-1) exp(-theta (x/eta + eta/x)/2).

``b == 0`` with ``p > 0`` is the Gamma law with shape p and rate a/2, and
``a == 0`` with ``p < 0`` is the reciprocal Gamma law; both are handled by
their own closed forms instead of Bessel limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import GigDomainError, NonFiniteMomentError
from .special import bessel_k_dlog_dorder, bessel_k_ratio, log_bessel_k

FULL = "gig"
GAMMA = "gamma"
RECIPROCAL_GAMMA = "reciprocal_gamma"


@dataclass(frozen=True)
class GigParams:
    """Parameters (p, a, b) of GIG(p, a, b)."""

    p: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("p", "a", "b"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise GigDomainError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.a < 0 or self.b < 0:
            raise GigDomainError("a and b must be nonnegative")
        if self.a == 0 and self.b == 0:
            raise GigDomainError("a and b cannot both vanish")
        if self.b == 0 and not self.p > 0:
            raise GigDomainError("the Gamma branch (b = 0) requires p > 0")
        if self.a == 0 and not self.p < 0:
            raise GigDomainError("the reciprocal Gamma branch (a = 0) requires p < 0")

    @classmethod
    def from_theta_eta(cls, p, theta, eta):
        if not (theta > 0 and eta > 0):
            raise GigDomainError("theta and eta must be positive")
        return cls(p, theta / eta, theta * eta)

    @classmethod
    def inverse_gaussian(cls, a, b):
        """IG(a, b) = GIG(-1/2, a, b): mean sqrt(b/a), shape b."""
        return cls(-0.5, a, b)

    @property
    def branch(self):
        if self.b == 0:
            return GAMMA
        if self.a == 0:
            return RECIPROCAL_GAMMA
        return FULL

    @property
    def theta(self):
        return math.sqrt(self.a * self.b)

    @property
    def eta(self):
        if self.a == 0 or self.b == 0:
            raise GigDomainError("eta is only defined on the full GIG branch")
        return math.sqrt(self.b / self.a)

    def as_dict(self):
        return {"p": self.p, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class GammaParams:
    """Gamma law with density proportional to x^(shape-1) exp(-rate x)."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise GigDomainError("Gamma shape and rate must be positive")
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "rate", float(self.rate))

    def to_gig(self):
        return GigParams(self.shape, 2.0 * self.rate, 0.0)


def _positive(x, what="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise GigDomainError(f"{what} must be strictly positive")
    return arr


def _out(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def reciprocal(params):
    """Law of 1/X when X ~ GIG(p, a, b)."""
    return GigParams(-params.p, params.b, params.a)


def scale_score(p, theta, x):
    """Scale score 1 + x f'(x)/f(x) of the standardized GIG density."""
    if not theta > 0:
        raise GigDomainError("theta must be positive")
    x = _positive(x)
    return _out(p - 0.5 * theta * x + 0.5 * theta / x, x)


def mode(params):
    p, a, b = params.p, params.a, params.b
    if params.branch == GAMMA:
        return 2.0 * (p - 1.0) / a if p > 1 else 0.0
    if params.branch == RECIPROCAL_GAMMA:
        return b / (2.0 * (1.0 - p))
    # root of -(a/2)x^2 + (p-1)x + b/2, written without cancellation
    q = p - 1.0
    return b / (math.sqrt(q * q + a * b) - q)


def _log_normalizer(params):
    p, a, b = params.p, params.a, params.b
    if params.branch == GAMMA:
        rate = 0.5 * a
        return p * math.log(rate) - special.gammaln(p)
    if params.branch == RECIPROCAL_GAMMA:
        s, rate = -p, 0.5 * b
        return s * math.log(rate) - special.gammaln(s)
    return 0.5 * p * (math.log(a) - math.log(b)) - math.log(2.0) - log_bessel_k(p, params.theta)


def log_density(params, x):
    x_arr = _positive(x)
    logx = np.log(x_arr)
    val = _log_normalizer(params) + (params.p - 1.0) * logx
    if params.a > 0:
        val = val - 0.5 * params.a * x_arr
    if params.b > 0:
        val = val - 0.5 * params.b / x_arr
    return _out(val, x)


def density(params, x):
    return _out(np.exp(log_density(params, x)), x)


def density_theta_eta(p, theta, eta, x):
    """The (p, theta, eta) form of the density, evaluated independently."""
    x_arr = _positive(x)
    u = x_arr / eta
    log_f = (
        -math.log(2.0 * eta) - log_bessel_k(p, theta)
        + (p - 1.0) * np.log(u) - 0.5 * theta * (u + 1.0 / u)
    )
    return _out(np.exp(log_f), x)


# --------------------------------------------------------------------------
# CDF on the full branch: composite Gauss-Legendre in t = log(x/eta), where
# the density of T is exp(p t - theta cosh t) / (2 K_p(theta)), log-concave.

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_TAIL_DROP = 800.0


class _LogScaleTable:
    def __init__(self, p, theta):
        self.p, self.theta = p, theta
        self.t_star = math.asinh(p / theta)
        self.g_star = self._g_raw(self.t_star)
        width = 1.0 / math.sqrt(math.hypot(p, theta))
        self.t_lo = self._edge(-1.0, width)
        self.t_hi = self._edge(1.0, width)
        step = min(0.1, 0.25 * width)
        n = int(min(20000, max(64, math.ceil((self.t_hi - self.t_lo) / step))))
        self.knots = np.linspace(self.t_lo, self.t_hi, n + 1)
        pieces = self._integrate(self.knots[:-1], self.knots[1:])
        self.left = np.concatenate([[0.0], np.cumsum(pieces)])
        self.right = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        self.mass = self.left[-1]
        log_exact = math.log(2.0) + log_bessel_k(p, theta) - self.g_star
        self.normalization_error = abs(math.expm1(math.log(self.mass) - log_exact))

    def _g_raw(self, t):
        return self.p * t - self.theta * np.cosh(t)

    def weight(self, t):
        return np.exp(self._g_raw(t) - self.g_star)

    def _edge(self, direction, width):
        def drop(t):
            return self.g_star - self._g_raw(t) - _TAIL_DROP

        inner, outer = 0.0, width
        while drop(self.t_star + direction * outer) < 0:
            inner, outer = outer, 2.0 * outer
        return optimize.brentq(drop, self.t_star + direction * inner,
                               self.t_star + direction * outer)

    def _integrate(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[..., None] + half[..., None] * _GL_X
        return half * (self.weight(nodes) @ _GL_W)

    def _locate(self, t):
        k = np.searchsorted(self.knots, t, side="right") - 1
        return np.clip(k, 0, len(self.knots) - 2)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        k = self._locate(t)
        inside = np.clip(t, self.t_lo, self.t_hi)
        val = (self.left[k] + self._integrate(self.knots[k], inside)) / self.mass
        val = np.where(t <= self.t_lo, 0.0, val)
        return np.clip(np.where(t >= self.t_hi, 1.0, val), 0.0, 1.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        k = self._locate(t)
        inside = np.clip(t, self.t_lo, self.t_hi)
        val = (self.right[k + 1] + self._integrate(inside, self.knots[k + 1])) / self.mass
        val = np.where(t >= self.t_hi, 0.0, val)
        return np.clip(np.where(t <= self.t_lo, 1.0, val), 0.0, 1.0)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        lower = q <= 0.5
        # lower half solves the left mass equation, upper half the right one
        target = np.where(lower, q, 1.0 - q) * self.mass
        k_low = np.searchsorted(self.left, target, side="right") - 1
        k_up = len(self.knots) - 1 - np.searchsorted(self.right[::-1], target, side="right")
        k = np.clip(np.where(lower, k_low, k_up), 0, len(self.knots) - 2)
        lo = self.knots[k].copy()
        hi = self.knots[k + 1].copy()
        base = np.where(lower, self.left[k], self.right[k + 1])

        def resid(t):
            part = np.where(lower, self._integrate(self.knots[k], t),
                            self._integrate(t, self.knots[k + 1]))
            return np.where(lower, base + part - target, target - base - part)

        t = 0.5 * (lo + hi)
        for _ in range(100):
            r = resid(t)
            lo = np.where(r < 0, t, lo)
            hi = np.where(r >= 0, t, hi)
            slope = self.weight(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_new = t - r / slope
            bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
            t_new = np.where(bad, 0.5 * (lo + hi), t_new)
            if np.all(np.abs(t_new - t) <= 4e-16 * np.maximum(1.0, np.abs(t))):
                t = t_new
                break
            t = t_new
        return t


@lru_cache(maxsize=64)
def _table(p, theta):
    return _LogScaleTable(p, theta)


def cdf_normalization_error(params):
    """Relative gap between the CDF table's total mass and 2 K_p(theta)."""
    if params.branch != FULL:
        return 0.0
    return _table(params.p, params.theta).normalization_error


def cdf(params, x):
    x_arr = _positive(x)
    if params.branch == GAMMA:
        val = special.gammainc(params.p, 0.5 * params.a * x_arr)
    elif params.branch == RECIPROCAL_GAMMA:
        val = special.gammaincc(-params.p, 0.5 * params.b / x_arr)
    else:
        val = _table(params.p, params.theta).cdf(np.log(x_arr / params.eta))
    return _out(val, x)


def sf(params, x):
    x_arr = _positive(x)
    if params.branch == GAMMA:
        val = special.gammaincc(params.p, 0.5 * params.a * x_arr)
    elif params.branch == RECIPROCAL_GAMMA:
        val = special.gammainc(-params.p, 0.5 * params.b / x_arr)
    else:
        val = _table(params.p, params.theta).sf(np.log(x_arr / params.eta))
    return _out(val, x)


def quantile(params, q):
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr > 0) & (q_arr < 1))):
        raise GigDomainError("quantile level must lie strictly inside (0, 1)")
    if params.branch == GAMMA:
        val = np.where(q_arr <= 0.5, special.gammaincinv(params.p, q_arr),
                       special.gammainccinv(params.p, 1.0 - q_arr)) / (0.5 * params.a)
    elif params.branch == RECIPROCAL_GAMMA:
        s = -params.p
        g = np.where(q_arr <= 0.5, special.gammainccinv(s, q_arr),
                     special.gammaincinv(s, 1.0 - q_arr))
        val = 0.5 * params.b / g
    else:
        val = params.eta * np.exp(_table(params.p, params.theta).quantile(q_arr))
    return _out(val, q)


# --------------------------------------------------------------------------
# moments and entropy


def _order_shift_ratio(p, r, z):
    """K_{p+r}(z) / K_p(z)."""
    if r == 1:
        return bessel_k_ratio(p, z)
    if r == -1:
        return 1.0 / bessel_k_ratio(p - 1.0, z)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = special.kve(p + r, z) / special.kve(p, z)
    if np.isfinite(ratio) and ratio > 0:
        return float(ratio)
    return math.exp(log_bessel_k(p + r, z) - log_bessel_k(p, z))


def moment(params, r):
    """E[X^r]."""
    r = float(r)
    if r == 0:
        return 1.0
    p = params.p
    if params.branch == GAMMA:
        if not r > -p:
            raise NonFiniteMomentError(f"E[X^{r}] is infinite for Gamma shape {p}")
        return math.exp(special.gammaln(p + r) - special.gammaln(p) - r * math.log(0.5 * params.a))
    if params.branch == RECIPROCAL_GAMMA:
        s = -p
        if not r < s:
            raise NonFiniteMomentError(f"E[X^{r}] is infinite for reciprocal Gamma shape {s}")
        return math.exp(special.gammaln(s - r) - special.gammaln(s) + r * math.log(0.5 * params.b))
    return params.eta ** r * _order_shift_ratio(p, r, params.theta)


def mean_log(params):
    """E[log X]."""
    if params.branch == GAMMA:
        return special.digamma(params.p) - math.log(0.5 * params.a)
    if params.branch == RECIPROCAL_GAMMA:
        return -(special.digamma(-params.p) - math.log(0.5 * params.b))
    return math.log(params.eta) + bessel_k_dlog_dorder(params.p, params.theta)


def kawamura_targets(params):
    """Targets of the two maximum-entropy constraints.

    Returns (E[log(X/eta)], E[X/eta + eta/X]) = (d/dp log K_p(theta),
    (K_{p+1}(theta) + K_{p-1}(theta)) / K_p(theta)).
    """
    if params.branch != FULL:
        raise GigDomainError("entropy constraints need a > 0 and b > 0")
    p, theta = params.p, params.theta
    first = bessel_k_dlog_dorder(p, theta)
    second = bessel_k_ratio(p, theta) + 1.0 / bessel_k_ratio(p - 1.0, theta)
    return first, second


def entropy(params):
    """Differential entropy -E[log f(X)]."""
    p = params.p
    if params.branch == GAMMA:
        s, rate = p, 0.5 * params.a
        return s - math.log(rate) + special.gammaln(s) + (1.0 - s) * special.digamma(s)
    if params.branch == RECIPROCAL_GAMMA:
        s, rate = -p, 0.5 * params.b
        h_gamma = s - math.log(rate) + special.gammaln(s) + (1.0 - s) * special.digamma(s)
        return h_gamma - 2.0 * (special.digamma(s) - math.log(rate))
    theta = params.theta
    log_term, spread = kawamura_targets(params)
    return (
        math.log(2.0 * params.eta) + log_bessel_k(p, theta)
        - (p - 1.0) * log_term + 0.5 * theta * spread
    )

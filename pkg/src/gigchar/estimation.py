"""Maximum likelihood for GIG samples.

The log-likelihood of the (p, theta, eta) density depends on the data only
through n, the mean, the mean of reciprocals and the mean log, so every
evaluation below is O(1) once a :class:`SummaryStats` has been built.  For
fixed (p, theta) the scale MLE is the closed-form root of the profile score,
which reduces the full fit to a 2-D search over (p, log theta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .core import GigParams, scale_score
from .errors import ConvergenceError, GigDomainError, SampleSizeError
from .sampling import SampleBatch
from .special import bessel_k_dlog_dorder, bessel_k_ratio, log_bessel_k

_LOG2 = math.log(2.0)
FULL_MODE = "full"
FIXED_P_MODE = "fixed_p"
IG_MODE = "ig"
# 95% point of the 50:50 mixture of chi2_0 and chi2_1, the null law of the
# likelihood ratio for a single parameter on the boundary of its range
BOUNDARY_LR = 2.705543454095414


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    mean_inv: float
    mean_log: float
    n: int
    constant: bool = False

    def __post_init__(self):
        if self.n < 1 or not (self.mean > 0 and self.mean_inv > 0):
            raise GigDomainError("summary statistics need a nonempty positive sample")
        if self.mean * self.mean_inv < 1.0 - 1e-12:
            raise GigDomainError("mean * mean_inv < 1 violates the AM-HM inequality")

    @classmethod
    def from_sample(cls, batch):
        x = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
        x = x.ravel()
        if x.size == 0:
            raise SampleSizeError("empty sample")
        if np.any(~(x > 0)) or np.any(~np.isfinite(x)):
            raise GigDomainError("sample values must be positive and finite")
        return cls(float(x.mean()), float((1.0 / x).mean()), float(np.log(x).mean()),
                   int(x.size), bool(np.all(x == x[0])))

    @property
    def am_hm(self):
        return max(self.mean * self.mean_inv, 1.0)


@dataclass(frozen=True)
class FitResult:
    params: GigParams
    log_likelihood: float
    mode: str
    branch: str
    converged: bool
    iterations: int
    gradient_norm: float
    standard_errors: dict | None = None
    boundary: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log_likelihood):
            raise ValueError("log_likelihood must be finite")

    def as_dict(self):
        out = {
            "params": self.params.as_dict(),
            "branch": self.branch,
            "mode": self.mode,
            "log_likelihood": self.log_likelihood,
            "convergence": {
                "converged": self.converged,
                "iterations": self.iterations,
                "gradient_norm": self.gradient_norm,
            },
            "boundary": self.boundary,
            "standard_errors": self.standard_errors,
        }
        if self.params.branch == "gig":
            out["theta"] = self.params.theta
            out["eta"] = self.params.eta
        out.update(self.extra)
        return out


def eta_mle(stats, p, theta, return_flag=False):
    """Closed-form scale MLE (sqrt(p^2 + theta^2 m m_{-1}) - p)/(theta m_{-1}).

    For p > 0 the rationalized form theta m/(root + p) avoids cancellation.
    """
    if not theta > 0:
        raise GigDomainError("theta must be positive")
    root = math.sqrt(p * p + theta * theta * stats.am_hm)
    if p > 0:
        eta = theta * stats.mean / (root + p)
    else:
        eta = (root - p) / (theta * stats.mean_inv)
    if stats.constant:
        warnings.warn("constant sample: the scale estimate is degenerate", RuntimeWarning,
                      stacklevel=2)
    if return_flag:
        return eta, stats.constant
    return eta


def profile_score(batch, p, theta, eta):
    """sum_i psi(x_i / eta), which vanishes at the scale MLE."""
    x = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    return float(np.sum(scale_score(p, theta, x / eta)))


def mean_log_likelihood(stats, p, theta, eta):
    """Average log-density of the (p, theta, eta) law over the sample."""
    log_eta = math.log(eta)
    return (
        -_LOG2 - log_eta - log_bessel_k(p, theta)
        + (p - 1.0) * (stats.mean_log - log_eta)
        - 0.5 * theta * (stats.mean / eta + eta * stats.mean_inv)
    )


def log_likelihood(stats, params):
    """Total log-likelihood of a full-branch GigParams."""
    return stats.n * mean_log_likelihood(stats, params.p, params.theta, params.eta)


def profile_likelihood(batch, p, theta, eta_grid):
    """(eta, total log-likelihood) at each grid point, by direct summation."""
    x = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    grid = np.asarray(eta_grid, dtype=float)
    if np.any(~(grid > 0)) or np.any(np.diff(grid) <= 0):
        raise GigDomainError("eta_grid must be positive and strictly increasing")
    n = x.size
    s_log = float(np.log(x).sum())
    s_x = float(x.sum())
    s_inv = float((1.0 / x).sum())
    log_eta = np.log(grid)
    ll = (
        -n * (_LOG2 + log_eta + log_bessel_k(p, theta))
        + (p - 1.0) * (s_log - n * log_eta)
        - 0.5 * theta * (s_x / grid + grid * s_inv)
    )
    return list(zip(grid.tolist(), ll.tolist()))


# --------------------------------------------------------------------------
# profiled objective in (p, log theta)


def _profiled(stats, p, log_theta):
    theta = math.exp(log_theta)
    eta = eta_mle(stats, p, theta)
    return mean_log_likelihood(stats, p, theta, eta), theta, eta


def _profiled_gradient(stats, p, theta, eta):
    """Gradient of the profiled mean log-likelihood in (p, log theta).

    By the envelope theorem the eta-derivative drops out.
    """
    dp = -bessel_k_dlog_dorder(p, theta) + stats.mean_log - math.log(eta)
    # d/dtheta log K_p(theta) = p/theta - K_{p+1}/K_p
    dtheta = -(p / theta - bessel_k_ratio(p, theta)) - 0.5 * (stats.mean / eta + eta * stats.mean_inv)
    return dp, theta * dtheta


def _optimize(stats, starts, fixed_p):
    best = None
    trace = []
    for idx, start in enumerate(starts):
        if fixed_p is None:
            def fun(z):
                val, theta, eta = _profiled(stats, z[0], z[1])
                g = _profiled_gradient(stats, z[0], theta, eta)
                return -val, -np.array(g)
            x0 = np.array(start)
        else:
            def fun(z):
                val, theta, eta = _profiled(stats, fixed_p, z[0])
                g = _profiled_gradient(stats, fixed_p, theta, eta)
                return -val, -np.array([g[1]])
            x0 = np.array([start[1]])
        with np.errstate(over="ignore", invalid="ignore"):
            res = optimize.minimize(fun, x0, jac=True, method="BFGS",
                                    options={"gtol": 1e-9, "maxiter": 500})
        gnorm = float(np.max(np.abs(res.jac))) if np.all(np.isfinite(res.jac)) else math.inf
        trace.append({"start": list(map(float, x0)), "x": list(map(float, res.x)),
                      "value": float(-res.fun), "gradient_norm": gnorm,
                      "iterations": int(res.nit), "message": str(res.message)})
        if not np.isfinite(res.fun):
            continue
        # lowest index wins ties within 1e-10
        if best is None or -res.fun > -best[0].fun + 1e-10:
            best = (res, gnorm, idx)
    return best, trace


def _starts(stats, fixed_p):
    spread = stats.am_hm - 1.0
    theta0 = 1.0 / spread if spread > 0 else 1.0
    theta0 = min(max(theta0, 1e-3), 1e4)
    ps = [fixed_p] if fixed_p is not None else [-1.0, 0.0, 1.0]
    return [(p0, math.log(theta0)) for p0 in ps]


def _gamma_shape_mle(log_mean_minus_mean_log):
    # log k - digamma(k) = s has a unique root for s > 0
    s = log_mean_minus_mean_log
    lo, hi = 1e-8, 1.0
    while math.log(hi) - special.digamma(hi) > s:
        hi *= 2.0
    return optimize.brentq(lambda k: math.log(k) - special.digamma(k) - s, lo, hi, xtol=1e-14)


def _gamma_loglik(n, shape, rate, mean, mean_log):
    return float(n * (shape * math.log(rate) - special.gammaln(shape)
                      + (shape - 1.0) * mean_log - rate * mean))


def _boundary_fit(stats, fixed_p):
    """Best Gamma or reciprocal-Gamma fit: (loglik, GigParams, branch)."""
    candidates = []
    s_gamma = math.log(stats.mean) - stats.mean_log
    s_recip = math.log(stats.mean_inv) + stats.mean_log
    if fixed_p is None or fixed_p > 0:
        shape = fixed_p if fixed_p is not None else _gamma_shape_mle(s_gamma) if s_gamma > 0 else None
        if shape is not None:
            rate = shape / stats.mean
            ll = _gamma_loglik(stats.n, shape, rate, stats.mean, stats.mean_log)
            candidates.append((ll, GigParams(shape, 2.0 * rate, 0.0), "gamma"))
    if fixed_p is None or fixed_p < 0:
        shape = -fixed_p if fixed_p is not None else _gamma_shape_mle(s_recip) if s_recip > 0 else None
        if shape is not None:
            rate = shape / stats.mean_inv
            # density of X = 1/Y picks up the Jacobian x^{-2}
            ll = _gamma_loglik(stats.n, shape, rate, stats.mean_inv, -stats.mean_log)
            ll -= 2.0 * stats.n * stats.mean_log
            candidates.append((ll, GigParams(-shape, 0.0, 2.0 * rate), "reciprocal_gamma"))
    if not candidates:
        return None
    return max(candidates, key=lambda c: c[0])


def _observed_information_se(stats, params, free_p):
    """Standard errors of (p, theta, eta) from a finite-difference Hessian."""
    names = ["p", "theta", "eta"] if free_p else ["theta", "eta"]
    z0 = np.array([params.p, params.theta, params.eta] if free_p else [params.theta, params.eta])

    def ll(z):
        if free_p:
            return log_likelihood(stats, GigParams.from_theta_eta(*z))
        return log_likelihood(stats, GigParams.from_theta_eta(params.p, *z))

    k = z0.size
    h = 1e-4 * np.maximum(np.abs(z0), 1.0)
    hess = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            val = (ll(z0 + ei + ej) - ll(z0 + ei - ej) - ll(z0 - ei + ej) + ll(z0 - ei - ej))
            hess[i, j] = hess[j, i] = val / (4.0 * h[i] * h[j])
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(cov)
    return {nm: (float(math.sqrt(v)) if v > 0 else math.nan) for nm, v in zip(names, diag)}


def _fit_ig(stats):
    mu = stats.mean
    excess = stats.mean_inv - 1.0 / mu
    if not excess > 0:
        raise GigDomainError("the IG fit needs a nonconstant sample")
    lam = 1.0 / excess
    params = GigParams.inverse_gaussian(lam / (mu * mu), lam)
    n = stats.n
    se = {"mu": math.sqrt(mu ** 3 / (lam * n)), "lambda": lam * math.sqrt(2.0 / n)}
    return FitResult(params, log_likelihood(stats, params), IG_MODE, params.branch, True, 0, 0.0,
                     standard_errors=se, extra={"mu": mu, "lambda": lam})


def fit_gig(batch, mode=FULL_MODE, p=None, standard_errors=False, boundary_lr=BOUNDARY_LR):
    """Maximum likelihood fit in one of three modes.

    ``full`` searches (p, log theta) with eta profiled out, ``fixed_p`` only
    log theta, and ``ig`` returns the closed-form (mu, lambda).  When the
    Gamma or reciprocal-Gamma limit is not beaten by a likelihood ratio of
    ``boundary_lr`` the boundary fit is returned with ``boundary=True``.
    """
    mode = mode.replace("-", "_")
    stats = SummaryStats.from_sample(batch)
    if stats.n < 3:
        raise SampleSizeError("at least 3 observations are required")
    if stats.constant:
        raise GigDomainError("the sample is constant")
    if mode == IG_MODE:
        return _fit_ig(stats)
    if mode == FIXED_P_MODE:
        if p is None:
            raise GigDomainError("fixed_p mode needs p")
        fixed_p = float(p)
    elif mode == FULL_MODE:
        fixed_p = None
    else:
        raise GigDomainError(f"unknown fit mode {mode!r}")

    best, trace = _optimize(stats, _starts(stats, fixed_p), fixed_p)
    if best is None:
        raise ConvergenceError("no start produced a finite likelihood", trace)
    res, gnorm, _ = best
    if fixed_p is None:
        p_hat, log_theta = float(res.x[0]), float(res.x[1])
    else:
        p_hat, log_theta = fixed_p, float(res.x[0])
    ll_mean, theta, eta = _profiled(stats, p_hat, log_theta)
    interior_ll = stats.n * ll_mean
    converged = gnorm <= 1e-6

    boundary = _boundary_fit(stats, fixed_p)
    if boundary is not None:
        b_ll, b_params, b_branch = boundary
        if 2.0 * (interior_ll - b_ll) < boundary_lr or not math.isfinite(interior_ll):
            return FitResult(b_params, b_ll, mode, b_branch, True, int(res.nit), gnorm,
                             boundary=True,
                             extra={"interior_log_likelihood": interior_ll,
                                    "interior_theta": theta})
    if not converged:
        raise ConvergenceError(f"gradient norm {gnorm:.3g} above 1e-6", trace)
    params = GigParams.from_theta_eta(p_hat, theta, eta)
    ses = _observed_information_se(stats, params, fixed_p is None) if standard_errors else None
    return FitResult(params, interior_ll, mode, params.branch, converged, int(res.nit), gnorm,
                     standard_errors=ses)

"""Stein operator of the GIG law and the tests built on it.

For a differentiable h with f h -> 0 at both ends of (0, inf),

    T h(x) = h'(x) + ((p - 1)/x + b/(2x^2) - a/2) h(x)

has mean zero under GIG(p, a, b).  Multiplying through by x^2 gives the
polynomial-coefficient form T2 h = T(x^2 h).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core
from .core import GigParams
from .errors import BoundaryConditionError, SampleSizeError, TailTruncationError
from .sampling import SampleBatch, SeedPlan, chain_path, sample_gig

STANDARD = "standard"
TRACTABLE = "tractable"


@dataclass(frozen=True)
class TestFunction:
    """A test function with the growth data needed for its boundary certificate.

    Near 0, h(x) behaves like x^order_at_zero (times log x when ``log_factor``);
    near infinity like x^order_at_infinity unless ``decay_rate`` > 0, in which
    case it is O(exp(-decay_rate x)).
    """

    __test__ = False  # not a pytest class

    name: str
    h: object
    dh: object
    order_at_zero: float = 0.0
    order_at_infinity: float = 0.0
    decay_rate: float = 0.0
    log_factor: bool = False

    def vanishes_at_zero(self, params):
        if params.b > 0:
            return True
        return params.p - 1.0 + self.order_at_zero > 0

    def vanishes_at_infinity(self, params):
        if params.a > 0 or self.decay_rate > 0:
            return True
        return params.p - 1.0 + self.order_at_infinity < 0

    def certified(self, params):
        return self.vanishes_at_zero(params) and self.vanishes_at_infinity(params)

    def certificate(self, params):
        return {"zero": self.vanishes_at_zero(params),
                "infinity": self.vanishes_at_infinity(params)}


def _const(x):
    return np.ones_like(x)


def _zero(x):
    return np.zeros_like(x)


DEFAULT_CLASS = (
    TestFunction("1", _const, _zero, 0.0, 0.0),
    TestFunction("x", lambda x: x, _const, 1.0, 1.0),
    TestFunction("1/x", lambda x: 1.0 / x, lambda x: -1.0 / (x * x), -1.0, -1.0),
    TestFunction("log x", np.log, lambda x: 1.0 / x, 0.0, 0.0, log_factor=True),
    TestFunction("exp(-x)", lambda x: np.exp(-x), lambda x: -np.exp(-x), 0.0, decay_rate=1.0),
    TestFunction("x exp(-x)", lambda x: x * np.exp(-x), lambda x: (1.0 - x) * np.exp(-x),
                 1.0, decay_rate=1.0),
)


def default_class(params):
    """The default functions whose certificate holds for ``params``."""
    return [fn for fn in DEFAULT_CLASS if fn.certified(params)]


def by_name(name):
    for fn in DEFAULT_CLASS:
        if fn.name == name:
            return fn
    raise KeyError(name)


def stein_apply(params, h, x, form=STANDARD):
    """T h(x) (``standard``) or x^2 h'(x) + (-a x^2/2 + (p+1) x + b/2) h(x)."""
    x = core._positive(x)
    p, a, b = params.p, params.a, params.b
    hx = h.h(x)
    dhx = h.dh(x)
    if form == STANDARD:
        out = dhx + ((p - 1.0) / x + b / (2.0 * x * x) - 0.5 * a) * hx
    elif form == TRACTABLE:
        out = x * x * dhx + (-0.5 * a * x * x + (p + 1.0) * x + 0.5 * b) * hx
    else:
        raise ValueError(f"unknown form {form!r}")
    return core._out(out, x)


def _values(batch):
    x = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float).ravel()
    if x.size == 0:
        raise SampleSizeError("empty batch")
    return x


def _require_certificate(params, h):
    if not h.certified(params):
        raise BoundaryConditionError(
            f"f*h does not vanish at both ends for h={h.name} under {params}"
        )


def stein_expectation(params, h, batch):
    """(mean, standard error) of T h over the batch."""
    _require_certificate(params, h)
    x = _values(batch)
    t = stein_apply(params, h, x)
    se = float(t.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
    return float(t.mean()), se


def moment_identity_residual(params):
    """p + (b/2) E[1/X] - (a/2) E[X]: the h(x) = x case in closed form."""
    m1 = core.moment(params, 1.0)
    m_inv = core.moment(params, -1.0) if params.b > 0 else 0.0
    return params.p + 0.5 * params.b * m_inv - 0.5 * params.a * m1


# --------------------------------------------------------------------------
# Stein equation


def stein_solution(params, z, x_grid):
    """h_z(x) = (F(min(x, z)) - F(x) F(z)) / f(x), solving T h = 1{x<=z} - F(z).

    Evaluated as F(x)(1 - F(z))/f(x) for x <= z and F(z)(1 - F(x))/f(x) for
    x > z, in logs so that the tails do not overflow.
    """
    if not z > 0:
        raise core.GigDomainError("z must be positive")
    x = np.asarray(x_grid, dtype=float)
    if np.any(~(x > 0)) or np.any(np.diff(x) < 0):
        raise core.GigDomainError("x_grid must be positive and sorted")
    fz = float(core.cdf(params, z))
    sz = float(core.sf(params, z))
    log_f = np.atleast_1d(core.log_density(params, x))
    left = x <= z
    tail = np.where(left, np.atleast_1d(core.cdf(params, x)), np.atleast_1d(core.sf(params, x)))
    if np.any(tail <= 0):
        bad = x[tail <= 0]
        raise TailTruncationError(
            f"tail probability underflows at x in [{bad.min():g}, {bad.max():g}]"
        )
    with np.errstate(divide="ignore"):
        factor = np.where(left, math.log(sz) if sz > 0 else -np.inf,
                          math.log(fz) if fz > 0 else -np.inf)
    return np.exp(np.log(tail) + factor - log_f)


# --------------------------------------------------------------------------
# goodness of fit


@dataclass(frozen=True)
class SteinTestResult:
    discrepancy: float
    per_function: dict
    p_value: float | None
    n_bootstrap: int
    n: int

    def __post_init__(self):
        if not self.discrepancy >= 0:
            raise ValueError("discrepancy must be nonnegative")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value must lie in [0, 1]")

    def as_dict(self):
        return {
            "discrepancy": self.discrepancy,
            "p_value": self.p_value,
            "n_bootstrap": self.n_bootstrap,
            "n": self.n,
            "per_function": self.per_function,
        }


def _discrepancy(params, functions, x):
    """max_k |mean T h_k| / SE and the per-function table."""
    table = {}
    worst = 0.0
    n = x.size
    for fn in functions:
        t = stein_apply(params, fn, x)
        mean = float(t.mean())
        se = float(t.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        if se > 0:
            z = abs(mean) / se
        else:
            z = 0.0 if mean == 0.0 else math.inf
        table[fn.name] = {"mean": mean, "se": se, "z": z}
        worst = max(worst, z)
    return worst, table


def _resolve_class(params, function_class):
    if function_class is None:
        functions = default_class(params)
    else:
        functions = list(function_class)
        for fn in functions:
            _require_certificate(params, fn)
    if not functions:
        raise BoundaryConditionError("no certified test function for these parameters")
    return functions


def stein_statistic(batch, params, function_class=None):
    """Discrepancy and per-function contributions, without calibration."""
    x = _values(batch)
    return _discrepancy(params, _resolve_class(params, function_class), x)


def bootstrap_discrepancies(params, n, functions, n_bootstrap, plan, workers=1):
    """Null discrepancies from fresh GIG samples of size n, in replicate order."""
    def one(k):
        x = sample_gig(params, n, plan.substream(k)).values
        return _discrepancy(params, functions, x)[0]

    if workers <= 1:
        return np.array([one(k) for k in range(n_bootstrap)])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(one, range(n_bootstrap))))


def stein_gof(batch, params, function_class=None, n_bootstrap=199, plan=SeedPlan(0), workers=1):
    """Stein-discrepancy goodness-of-fit test with a parametric bootstrap."""
    x = _values(batch)
    if n_bootstrap < 99:
        raise core.GigDomainError("n_bootstrap must be at least 99")
    if x.size < 2:
        raise SampleSizeError("need at least two observations")
    functions = _resolve_class(params, function_class)
    observed, table = _discrepancy(params, functions, x)
    null = bootstrap_discrepancies(params, x.size, functions, n_bootstrap, plan, workers)
    p_value = (1.0 + np.count_nonzero(null >= observed)) / (n_bootstrap + 1.0)
    return SteinTestResult(observed, table, float(p_value), int(n_bootstrap), int(x.size))


# --------------------------------------------------------------------------
# continued-fraction chain


def chain_convergence_experiment(p, a, b, m_list, n, plan, init=None, function_class=None,
                                 workers=1):
    """[(m, discrepancy of X_m against GIG(-p, a, b))] for each m in m_list."""
    m_list = [int(m) for m in m_list]
    if any(m1 <= m0 for m0, m1 in zip(m_list, m_list[1:])):
        raise core.GigDomainError("m_list must be strictly increasing")
    target = GigParams(-p, a, b)
    functions = _resolve_class(target, function_class)
    path = chain_path(p, a, b, m_list, n, plan, init=init, workers=workers)
    return [(m, _discrepancy(target, functions, path[m].values)[0]) for m in m_list]


def null_band(params, n, replicates, plan, quantile=0.99, function_class=None, workers=1):
    """Upper ``quantile`` of the null discrepancy at sample size n."""
    functions = _resolve_class(params, function_class)
    null = bootstrap_discrepancies(params, n, functions, replicates, plan, workers)
    return float(np.quantile(null, quantile))


def decay_slope(results):
    """Least-squares slope of log discrepancy against m over finite entries."""
    pts = [(m, math.log(d)) for m, d in results if math.isfinite(d) and d > 0]
    if len(pts) < 2:
        return math.nan
    m, y = np.array(pts).T
    return float(np.polyfit(m, y, 1)[0])

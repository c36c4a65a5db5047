"""Monte Carlo probes for the known characterizations of GIG laws.

Every probe returns a :class:`ProbeReport`.  Conditional expectations
``E(Z | T) = const`` cannot be checked pointwise, so they are checked on
equal-count bins of the conditioning variable: each bin mean is standardized
by its own standard error and the flatness statistic is the largest absolute
standardized deviation from the pooled value (or from a declared target).
Independence is tested with the distance covariance and permutation
p-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import FULL, GigParams, entropy, kawamura_targets, mean_log, moment
from .dcov import DistanceCovariance
from .errors import ConfigurationError, GigDomainError, SampleSizeError
from .sampling import SampleBatch, SeedPlan, chain_iterates, advance_chain, ks_test, sample_gig

PASS = "pass"
FAIL = "fail"
DEGENERATE = "degenerate"
MIN_BIN_COUNT = 50


@dataclass(frozen=True)
class PairBatch:
    us: np.ndarray
    vs: np.ndarray

    def __post_init__(self):
        us = np.array(self.us, dtype=float).ravel()
        vs = np.array(self.vs, dtype=float).ravel()
        if us.size != vs.size:
            raise GigDomainError("us and vs must have equal length")
        if np.any(~(us > 0)) or np.any(~(vs > 0)):
            raise GigDomainError("pair entries must be strictly positive")
        us.setflags(write=False)
        vs.setflags(write=False)
        object.__setattr__(self, "us", us)
        object.__setattr__(self, "vs", vs)

    def __len__(self):
        return self.us.size

    @classmethod
    def from_xy(cls, x, y):
        return cls(*matsumoto_yor_transform(x, y))


@dataclass(frozen=True)
class ProbeReport:
    probe_name: str
    statistics: dict
    verdict: str
    p_value: float | None = None
    bin_table: list | None = None
    seed_plan: SeedPlan | None = None
    thresholds: dict = field(default_factory=dict)
    notes: tuple = ()

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value must lie in [0, 1]")
        if self.verdict not in (PASS, FAIL, DEGENERATE):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def passed(self):
        return self.verdict == PASS

    def as_dict(self):
        return {
            "probe_name": self.probe_name,
            "verdict": self.verdict,
            "p_value": self.p_value,
            "statistics": dict(self.statistics),
            "thresholds": dict(self.thresholds),
            "bin_table": self.bin_table,
            "seed_plan": None if self.seed_plan is None else self.seed_plan.as_dict(),
            "notes": list(self.notes),
        }


def _values(batch):
    return batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)


# --------------------------------------------------------------------------
# transforms


def matsumoto_yor_transform(x, y):
    """U = 1/(x+y), V = 1/x - 1/(x+y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise GigDomainError("x and y must be strictly positive")
    s = x + y
    u = 1.0 / s
    v = y / (x * s)
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


def inverse_matsumoto_yor(u, v):
    """x = 1/(u+v), y = 1/u - 1/(u+v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s = u + v
    x = 1.0 / s
    y = v / (u * s)
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def matsumoto_yor_pairs(p, a, b, n, plan, x_values=None, workers=1):
    """(U, V) from X ~ GIG(-p, a, b) and Y ~ Gamma(p, a/2), or a supplied X."""
    if x_values is None:
        x_values = sample_gig(GigParams(-p, a, b), n, plan.substream(0), workers).values
    y = sample_gig(GigParams(p, a, 0.0), n, plan.substream(1), workers).values
    return PairBatch.from_xy(x_values, y)


# --------------------------------------------------------------------------
# binning


def default_n_bins(n):
    return max(5, int(math.floor(math.sqrt(n) / 5.0)))


def equal_count_bins(conditioning, n_bins=None, min_count=MIN_BIN_COUNT):
    """Index groups of equal size after sorting on ``conditioning``."""
    conditioning = np.asarray(conditioning)
    n = conditioning.size
    if n_bins is None:
        n_bins = default_n_bins(n)
    if n_bins < 1:
        raise ConfigurationError("n_bins must be positive")
    if n // n_bins < min_count:
        raise ConfigurationError(
            f"{n} observations in {n_bins} bins leaves fewer than {min_count} per bin"
        )
    order = np.argsort(conditioning, kind="mergesort")
    return np.array_split(order, n_bins)


def _bin_rows(conditioning, groups, means, ses, center):
    rows = []
    zs = []
    for g, m, s in zip(groups, means, ses):
        z = (m - center) / s if s > 0 else (0.0 if m == center else math.inf)
        zs.append(z)
        rows.append({
            "lower": float(conditioning[g[0]]),
            "upper": float(conditioning[g[-1]]),
            "count": int(g.size),
            "mean": float(m),
            "se": float(s),
            "z": float(z),
        })
    return rows, float(np.max(np.abs(zs)))


def binned_means(conditioning, values, n_bins=None, center=None):
    """Per-bin means of ``values`` and the max standardized deviation."""
    conditioning = np.asarray(conditioning, dtype=float)
    values = np.asarray(values, dtype=float)
    groups = equal_count_bins(conditioning, n_bins)
    means = np.array([values[g].mean() for g in groups])
    ses = np.array([values[g].std(ddof=1) / math.sqrt(g.size) for g in groups])
    if center is None:
        center = float(values.mean())
    rows, flatness = _bin_rows(conditioning, groups, means, ses, center)
    return rows, flatness, center


def _ratio_se(num, den):
    """Delta-method standard error of mean(num)/mean(den)."""
    n = num.size
    mn, md = num.mean(), den.mean()
    r = mn / md
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] - 2.0 * r * cov[0, 1] + r * r * cov[1, 1]) / (n * md * md)
    return r, math.sqrt(max(var, 0.0))


def flatness_null_quantile(conditioning, values, n_bins=None, replicates=200,
                           plan=SeedPlan(0), quantile=0.99, center=None):
    """Upper quantile of the flatness statistic after breaking the pairing.

    Permuting ``values`` against ``conditioning`` keeps both marginals and
    makes the conditional mean exactly flat.
    """
    conditioning = np.asarray(conditioning, dtype=float)
    values = np.asarray(values, dtype=float)
    rng = plan.generator(0)
    stats_ = [binned_means(conditioning, values[rng.permutation(values.size)], n_bins, center)[1]
              for _ in range(replicates)]
    return float(np.quantile(stats_, quantile))


def null_distribution(statistic, replicates, plan):
    """Values of ``statistic(plan_k)`` for k = 0..replicates-1, in order."""
    return np.array([statistic(plan.substream(k)) for k in range(replicates)])


def _is_constant(x):
    return bool(np.all(x == x[0]))


# --------------------------------------------------------------------------
# independence


def dcov_permutation_test(x, y, n_permutations, rng):
    """Distance covariance statistic and its permutation p-value."""
    dc = DistanceCovariance(x, y)
    observed = dc.statistic()
    n = len(x)
    exceed = 0
    for _ in range(n_permutations):
        if dc.statistic(rng.permutation(n)) >= observed:
            exceed += 1
    return observed, (1.0 + exceed) / (n_permutations + 1.0)


def _independence_report(name, x, y, n_permutations, plan, alpha, extra=None):
    if n_permutations < 99:
        raise ConfigurationError("at least 99 permutations are required")
    if len(x) < 100:
        raise SampleSizeError("the independence test needs at least 100 pairs")
    thresholds = {"alpha": alpha, "n_permutations": n_permutations}
    statistics = {"n": int(len(x)), **(extra or {})}
    if _is_constant(x) or _is_constant(y):
        return ProbeReport(name, statistics, DEGENERATE, seed_plan=plan, thresholds=thresholds,
                           notes=("constant coordinate; independence is trivial",))
    stat, p_value = dcov_permutation_test(x, y, n_permutations, plan.generator(0))
    statistics["dcov_sq"] = stat
    verdict = PASS if p_value > alpha else FAIL
    return ProbeReport(name, statistics, verdict, p_value=p_value, seed_plan=plan,
                       thresholds=thresholds)


def independence_test(pairs, n_permutations=199, plan=SeedPlan(0), alpha=0.01):
    """Distance-covariance permutation test of U independent of V."""
    return _independence_report("independence", pairs.us, pairs.vs, n_permutations, plan, alpha)


# --------------------------------------------------------------------------
# constant regression


def _parse_transform(transform):
    if isinstance(transform, (int, np.integer)):
        r = int(transform)
        return f"V^{r}", lambda v: v ** r
    text = str(transform).replace(" ", "")
    if text == "V":
        return "V", lambda v: v
    if text == "1/V":
        return "1/V", lambda v: 1.0 / v
    if text.startswith("V^"):
        r = int(text[2:])
        return f"V^{r}", lambda v: v ** r
    raise ConfigurationError(f"unknown transform {transform!r}")


def regression_probe(pairs, transform="V", n_bins=None, target=None, threshold=4.0,
                     known_p=None):
    """Constant-regression check of a transform of V on U.

    Besides the flatness of E(T(V) | U) it reports c = E(V), d = E(1/V) and
    the parameters they determine, p = cd/(cd-1) and b' = d/(cd-1).  ``b'``
    belongs to the pairing X ~ GIG(-p, 2a, 2b'), Y ~ Gamma(p, rate a), so the
    GIG ``b`` in the Gamma(p, a/2) convention used everywhere else is 2b'.
    """
    name, fn = _parse_transform(transform)
    us, vs = pairs.us, pairs.vs
    values = fn(vs)
    rows, flatness, center = binned_means(us, values, n_bins, center=target)
    c = float(vs.mean())
    d = float((1.0 / vs).mean())
    cd = c * d
    statistics = {
        "transform": name,
        "flatness": flatness,
        "center": center,
        "c_hat": c,
        "d_hat": d,
        "cd": cd,
        "n": len(pairs),
    }
    notes = []
    if known_p is not None:
        statistics["b_hat_from_c"] = 2.0 * known_p / c
    if cd > 1.0:
        statistics["p_hat"] = cd / (cd - 1.0)
        statistics["b_hat_halved"] = d / (cd - 1.0)
        statistics["b_hat"] = 2.0 * d / (cd - 1.0)
    else:
        notes.append("characterization failure: cd <= 1")
    if _is_constant(vs):
        return ProbeReport("regression", statistics, DEGENERATE, bin_table=rows,
                           thresholds={"flatness": threshold}, notes=tuple(notes))
    verdict = PASS if (flatness <= threshold and cd > 1.0) else FAIL
    return ProbeReport("regression", statistics, verdict, bin_table=rows,
                       thresholds={"flatness": threshold}, notes=tuple(notes))


def chou_huang_probe(pairs, r, n_bins=None, threshold=4.0):
    """Constancy of E(V^{r+1}|U)/E(V^r|U) and E(V^{r+2}|U)/E(V^{r+1}|U)."""
    r = int(r)
    us, vs = pairs.us, pairs.vs
    groups = equal_count_bins(us, n_bins)
    powers = [vs ** r, vs ** (r + 1), vs ** (r + 2)]
    c_r = float(powers[1].mean() / powers[0].mean())
    c_r1 = float(powers[2].mean() / powers[1].mean())
    table = []
    flatness = 0.0
    for g in groups:
        r1, s1 = _ratio_se(powers[1][g], powers[0][g])
        r2, s2 = _ratio_se(powers[2][g], powers[1][g])
        z1 = (r1 - c_r) / s1 if s1 > 0 else 0.0
        z2 = (r2 - c_r1) / s2 if s2 > 0 else 0.0
        flatness = max(flatness, abs(z1), abs(z2))
        table.append({
            "lower": float(us[g[0]]), "upper": float(us[g[-1]]), "count": int(g.size),
            "ratio_r": r1, "se_r": s1, "z_r": z1,
            "ratio_r1": r2, "se_r1": s2, "z_r1": z2,
        })
    statistics = {"r": r, "c_r": c_r, "c_r1": c_r1, "flatness": flatness, "n": len(pairs)}
    notes = []
    ok = c_r1 > c_r > 0
    if ok:
        gap = c_r1 - c_r
        statistics["p_hat"] = c_r / gap - r
        statistics["b_hat_halved"] = 1.0 / gap
        statistics["b_hat"] = 2.0 / gap
    else:
        notes.append("characterization failure: need c_{r+1} > c_r > 0")
    verdict = PASS if (ok and flatness <= threshold) else FAIL
    return ProbeReport("chou-huang", statistics, verdict, bin_table=table,
                       thresholds={"flatness": threshold}, notes=tuple(notes))


# --------------------------------------------------------------------------
# Pusz


def pusz_coefficients(mu, b, delta, n):
    """(p_coef, q_coef, c) = (delta (mu - 1), delta b / 2, delta n (n mu - 1))."""
    return delta * (mu - 1.0), 0.5 * delta * b, delta * n * (n * mu - 1.0)


def simulate_pusz_samples(mu, a, b, n_cols, replicates, plan, delta=1.0,
                          reading="index_mu", workers=1):
    """A replicates x n_cols matrix of i.i.d. GIG draws for the Pusz probe.

    ``reading="index_mu"`` draws GIG(mu, a, b); ``reading="index_p_coef"``
    draws GIG(delta (mu - 1), a, b), the other way to read the index.
    """
    if reading == "index_mu":
        index = mu
    elif reading == "index_p_coef":
        index = delta * (mu - 1.0)
    else:
        raise ConfigurationError(f"unknown reading {reading!r}")
    batch = sample_gig(GigParams(index, a, b), n_cols * replicates, plan, workers)
    return batch.values.reshape(replicates, n_cols)


def pusz_statistics(samples, p_coef, q_coef):
    samples = np.asarray(samples, dtype=float)
    inv = 1.0 / samples
    n = samples.shape[1]
    lam = samples.sum(axis=1)
    inv_sum = inv.sum(axis=1)
    s = lam * (p_coef * inv_sum + q_coef * (inv * inv).sum(axis=1)) - n * q_coef * inv_sum
    return s, lam


def pusz_probe(samples, p_coef, q_coef, n_bins=None, threshold=4.0, expected_constant=None):
    """Flatness of E(S | Lambda) for rows of i.i.d. positive draws."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] < 2:
        raise GigDomainError("samples must be a matrix with at least two columns")
    if np.any(~(samples > 0)):
        raise GigDomainError("samples must be strictly positive")
    if not q_coef > 0:
        raise GigDomainError("q_coef must be positive")
    inv = 1.0 / samples
    gate = p_coef * inv.mean() + q_coef * (inv * inv).mean()
    if not gate > 0:
        raise GigDomainError("p E(1/X) + q E(1/X^2) must be positive")
    s, lam = pusz_statistics(samples, p_coef, q_coef)
    rows, flatness, center = binned_means(lam, s, n_bins)
    se = float(s.std(ddof=1) / math.sqrt(s.size))
    statistics = {
        "flatness": flatness,
        "constant_hat": center,
        "constant_se": se,
        "moment_gate": float(gate),
        "n_cols": int(samples.shape[1]),
        "replicates": int(samples.shape[0]),
    }
    if expected_constant is not None:
        statistics["expected_constant"] = expected_constant
        statistics["constant_z"] = (center - expected_constant) / se
    verdict = PASS if flatness <= threshold else FAIL
    return ProbeReport("pusz", statistics, verdict, bin_table=rows,
                       thresholds={"flatness": threshold})


# --------------------------------------------------------------------------
# entropy characterizations


def _mean_se(x):
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def entropy_constraint_check(params, batch, threshold=4.0):
    """Residuals of the two maximum-entropy constraints on a batch."""
    if params.branch != FULL:
        raise GigDomainError("entropy constraints need a > 0 and b > 0")
    x = _values(batch)
    eta = params.eta
    log_target, spread_target = kawamura_targets(params)
    m1, s1 = _mean_se(np.log(x / eta))
    m2, s2 = _mean_se(x / eta + eta / x)
    statistics = {
        "log_target": log_target,
        "log_mean": m1,
        "log_residual": m1 - log_target,
        "log_se": s1,
        "spread_target": spread_target,
        "spread_mean": m2,
        "spread_residual": m2 - spread_target,
        "spread_se": s2,
        "n": int(x.size),
    }
    z = max(abs(m1 - log_target) / s1, abs(m2 - spread_target) / s2)
    statistics["max_z"] = z
    ok = z <= threshold
    thresholds = {"max_z": threshold}
    if params.p == -0.5:
        closed = 2.0 + 1.0 / params.theta
        statistics["ig_closed_form_target"] = closed
        statistics["ig_closed_form_gap"] = abs(closed - spread_target)
        thresholds["ig_closed_form_gap"] = 1e-12
        ok = ok and statistics["ig_closed_form_gap"] <= 1e-12
    return ProbeReport("entropy", statistics, PASS if ok else FAIL, thresholds=thresholds)


def ig_reciprocal_root_entropy(a, b):
    """Entropy of 1/sqrt(X) for X ~ IG(a, b)."""
    params = GigParams.inverse_gaussian(a, b)
    return entropy(params) - math.log(2.0) - 1.5 * mean_log(params)


def mudholkar_tian_check(batch, a, b, threshold=4.0, entropy_tolerance=0.01):
    """Constraint residuals and entropy gap for Y = 1/sqrt(X).

    Any law meeting both constraints has entropy at most that of the IG
    reference, so an estimated entropy below the reference by more than
    ``entropy_tolerance`` is flagged.
    """
    x = _values(batch)
    y = 1.0 / np.sqrt(x)
    target1 = math.sqrt(b / a)
    target2 = math.sqrt(a / b) + 1.0 / b
    m1, s1 = _mean_se(y ** -2.0)
    m2, s2 = _mean_se(y ** 2.0)
    h_hat = float(stats.differential_entropy(y))
    h_ref = ig_reciprocal_root_entropy(a, b)
    z = max(abs(m1 - target1) / s1, abs(m2 - target2) / s2)
    statistics = {
        "inv_sq_target": target1,
        "inv_sq_residual": m1 - target1,
        "inv_sq_se": s1,
        "sq_target": target2,
        "sq_residual": m2 - target2,
        "sq_se": s2,
        "max_z": z,
        "entropy_estimate": h_hat,
        "entropy_reference": h_ref,
        "entropy_gap": h_hat - h_ref,
        "n": int(x.size),
    }
    notes = []
    ok = True
    if z > threshold:
        ok = False
        notes.append("constraint residuals exceed threshold")
    if h_hat < h_ref - entropy_tolerance:
        ok = False
        notes.append("entropy below the maximum-entropy reference")
    return ProbeReport("mudholkar-tian", statistics, PASS if ok else FAIL,
                       thresholds={"max_z": threshold, "entropy_tolerance": entropy_tolerance},
                       notes=tuple(notes))


# --------------------------------------------------------------------------
# IG characterizations


def khatri_statistics(samples):
    """Per-row (mean, mean of reciprocals - 1/mean), clamped at 0."""
    samples = np.asarray(samples, dtype=float)
    xbar = samples.mean(axis=1)
    second = (1.0 / samples).mean(axis=1) - 1.0 / xbar
    clamped = int(np.count_nonzero(second < 0))
    return xbar, np.maximum(second, 0.0), clamped


def khatri_probe(n_per_sample, replicates, params, plan, n_permutations=199, alpha=0.01,
                 workers=1):
    """Independence of the sample mean and X̄_{-1} - 1/X̄ across replicates."""
    if n_per_sample < 2:
        raise SampleSizeError("n_per_sample must be at least 2")
    draws = sample_gig(params, n_per_sample * replicates, plan.substream(0), workers)
    xbar, second, clamped = khatri_statistics(draws.values.reshape(replicates, n_per_sample))
    extra = {"n_per_sample": int(n_per_sample), "clamped_at_zero": clamped,
             "params": params.as_dict()}
    return _independence_report("khatri", xbar, second, n_permutations,
                                plan.substream(1), alpha, extra)


def martingale_compensator(b, n, literal=False):
    """The centring term c_n in M_n = n/S_n - c_n.

    With the density exp(-(ax + b/x)/2) used throughout the package,
    E[n/S_n] = sqrt(a/b) + 1/(bn), so c_n = 1/(bn) is the only choice with a
    mean that is constant in n.  ``literal=True`` gives 1/(2bn), which is the
    right term when b multiplies 1/x without the factor 1/2.
    """
    return 1.0 / ((2.0 if literal else 1.0) * b * n)


def martingale_probe(b, a, n, replicates, n_bins=None, plan=SeedPlan(0), data_params=None,
                     threshold=4.0, literal=False, workers=1):
    """Binwise check of E[M_n | S_{n+1}] = M_{n+1}.

    Data are i.i.d. IG(a, b) unless ``data_params`` names another law.
    """
    if n < 1:
        raise GigDomainError("n must be at least 1")
    if replicates < 10_000:
        raise SampleSizeError("the martingale probe needs at least 10^4 replicates")
    law = GigParams.inverse_gaussian(a, b) if data_params is None else data_params
    draws = sample_gig(law, (n + 1) * replicates, plan, workers).values.reshape(replicates, n + 1)
    s_n = draws[:, :n].sum(axis=1)
    s_n1 = s_n + draws[:, n]
    m_n = n / s_n - martingale_compensator(b, n, literal)
    m_n1 = (n + 1) / s_n1 - martingale_compensator(b, n + 1, literal)
    rows, flatness, _ = binned_means(s_n1, m_n - m_n1, n_bins, center=0.0)
    statistics = {"n": int(n), "replicates": int(replicates), "max_abs_z": flatness,
                  "law": law.as_dict(), "b": b, "literal_compensator": bool(literal)}
    verdict = PASS if flatness <= threshold else FAIL
    return ProbeReport("martingale", statistics, verdict, bin_table=rows, seed_plan=plan,
                       thresholds={"max_abs_z": threshold})


# --------------------------------------------------------------------------
# CLI-level drivers that generate their own data


def matsumoto_yor_probe(p, a, b, n, plan, n_permutations=199, alpha=0.01, workers=1):
    pairs = matsumoto_yor_pairs(p, a, b, n, plan.substream(0), workers=workers)
    report = _independence_report("matsumoto-yor", pairs.us, pairs.vs, n_permutations,
                                  plan.substream(1), alpha,
                                  {"params": {"p": p, "a": a, "b": b}})
    return report


def chain_probe(p, a, b, m, n, plan, init=None, ks_distance=0.01, alpha=0.01, workers=1):
    """KS distance of X_m to GIG(-p, a, b) plus a one-step stationarity check."""
    target = GigParams(-p, a, b)
    xm = chain_iterates(p, a, b, m, n, plan.substream(0), init, workers)
    ks_m = ks_test(xm, target)
    start = sample_gig(target, n, plan.substream(1), workers)
    stepped = advance_chain(start, p, a, b, 1, plan.substream(2), workers)
    ks_1 = ks_test(stepped, target)
    statistics = {
        "steps": int(m),
        "ks_distance": float(ks_m.statistic),
        "ks_p_value": float(ks_m.pvalue),
        "stationarity_ks_distance": float(ks_1.statistic),
        "stationarity_p_value": float(ks_1.pvalue),
        "n": int(n),
    }
    ok = ks_m.statistic < ks_distance and ks_1.pvalue > alpha
    return ProbeReport("chain", statistics, PASS if ok else FAIL, p_value=float(ks_1.pvalue),
                       seed_plan=plan, thresholds={"ks_distance": ks_distance, "alpha": alpha})

"""Seeded Gamma and GIG variate generation and the continued-fraction chain.

Every batch is cut into fixed-size chunks and chunk ``k`` draws from its own
generator derived from ``(master_seed, stream_id, k)``.  The output is
therefore independent of how many workers process the chunks.

GIG variates come from the ratio-of-uniforms family of Hörmann & Leydold
(Stat. Comput. 24, 2014): mode-shifted ROU when p >= 1 or theta > 1, plain
ROU for moderate theta, and their three-piece rejection hat for small theta.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import FULL, GAMMA, GammaParams, GigParams, cdf
from .errors import GigDomainError

CHUNK_SIZE = 1 << 14
_U64 = 1 << 64


@dataclass(frozen=True)
class SeedPlan:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not (isinstance(value, (int, np.integer)) and 0 <= value < _U64):
                raise GigDomainError(f"{name} must be an unsigned 64-bit integer")
            object.__setattr__(self, name, int(value))

    def generator(self, k=0):
        """Generator for replicate/chunk ``k``."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, int(k)))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, j):
        """An independent plan for the j-th consumer of this plan."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, int(j), 1))
        return SeedPlan(self.master_seed, int(seq.generate_state(1, np.uint64)[0]))

    def as_dict(self):
        return {"master_seed": self.master_seed, "stream_id": self.stream_id}


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    params_tag: str
    seed_plan: SeedPlan | None = None
    degenerate: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 1:
            raise GigDomainError("a SampleBatch needs at least one value")
        if np.any(~(values > 0)) or np.any(~np.isfinite(values)):
            raise GigDomainError("SampleBatch values must be finite and strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def lineage(self):
        return {
            "params": self.params_tag,
            "seed_plan": None if self.seed_plan is None else self.seed_plan.as_dict(),
            "n": len(self),
            "degenerate": self.degenerate,
            **self.meta,
        }


def _chunk_sizes(n):
    full, rest = divmod(n, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def map_chunks(fn, sizes, plan, workers=1):
    """Run ``fn(size, rng, k)`` per chunk and return the results in chunk order."""
    jobs = list(enumerate(sizes))

    def run(job):
        k, size = job
        return fn(size, plan.generator(k), k)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def _check_count(n):
    if int(n) != n or n < 1:
        raise GigDomainError("sample size must be a positive integer")
    return int(n)


# --------------------------------------------------------------------------
# Gamma


def sample_gamma(params, n, plan, workers=1):
    """i.i.d. Gamma(shape, rate) variates."""
    n = _check_count(n)
    scale = 1.0 / params.rate
    parts = map_chunks(lambda size, rng, k: rng.gamma(params.shape, scale, size),
                       _chunk_sizes(n), plan, workers)
    tag = f"Gamma(shape={params.shape!r}, rate={params.rate!r})"
    return SampleBatch(np.concatenate(parts), tag, plan)


# --------------------------------------------------------------------------
# GIG


def _log_quasi(x, lam, omega):
    return (lam - 1.0) * np.log(x) - 0.5 * omega * (x + 1.0 / x)


def _standard_mode(lam, omega):
    return omega / ((1.0 - lam) + math.sqrt((1.0 - lam) ** 2 + omega * omega))


def _rou_setup(lam, omega):
    """Bounding rectangle and shift for the ratio-of-uniforms regimes."""
    m = _standard_mode(lam, omega)
    if lam >= 1.0 or omega > 1.0:
        # mode shift: extremes of (x - m) sqrt(h(x)) are roots of a cubic
        a2 = -2.0 * (lam + 1.0) / omega - m
        a1 = 2.0 * m * (lam - 1.0) / omega - 1.0
        p1 = a1 - a2 * a2 / 3.0
        q1 = 2.0 * a2 ** 3 / 27.0 - a2 * a1 / 3.0 + m
        phi = math.acos(max(-1.0, min(1.0, -q1 * math.sqrt(-27.0 / p1 ** 3) / 2.0)))
        s1 = -math.sqrt(-4.0 * p1 / 3.0)
        root1 = s1 * math.cos(phi / 3.0 + math.pi / 3.0) - a2 / 3.0
        root2 = -s1 * math.cos(phi / 3.0) - a2 / 3.0
        lm = _log_quasi(m, lam, omega)
        vmin = (root1 - m) * math.exp(0.5 * (_log_quasi(root1, lam, omega) - lm))
        vmax = (root2 - m) * math.exp(0.5 * (_log_quasi(root2, lam, omega) - lm))
        return 1.0, vmin, vmax, m, lm
    lm = _log_quasi(m, lam, omega)
    xplus = ((1.0 + lam) + math.sqrt((1.0 + lam) ** 2 + omega * omega)) / omega
    vmax = xplus * math.exp(0.5 * (_log_quasi(xplus, lam, omega) - lm))
    return 1.0, 0.0, vmax, 0.0, lm


def _rou_draws(k, rng, lam, omega, setup):
    umax, vmin, vmax, shift, lm = setup
    u = umax * rng.random(k)
    v = vmin + (vmax - vmin) * rng.random(k)
    x = v / u + shift
    ok = x > 0
    accept = np.zeros(k, dtype=bool)
    accept[ok] = 2.0 * np.log(u[ok]) <= _log_quasi(x[ok], lam, omega) - lm
    return x[accept]


def _hat_draws(k, rng, lam, omega):
    """Rejection from a constant / power / exponential hat (small omega, lam < 1)."""
    m = _standard_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    xs = max(x0, 2.0 / omega)
    k1 = math.exp(_log_quasi(m, lam, omega))
    a1 = k1 * x0
    if x0 < 2.0 / omega:
        k2 = math.exp(-omega)
        if lam > 0:
            a2 = k2 * ((2.0 / omega) ** lam - x0 ** lam) / lam
        else:
            a2 = k2 * math.log(2.0 / omega ** 2)
    else:
        k2, a2 = 0.0, 0.0
    k3 = xs ** (lam - 1.0)
    a3 = 2.0 * k3 * math.exp(-xs * omega / 2.0) / omega
    total = a1 + a2 + a3

    u = rng.random(k)
    v = total * rng.random(k)
    x = np.empty(k)
    hat = np.empty(k)
    c1 = v <= a1
    c2 = ~c1 & (v <= a1 + a2)
    c3 = ~(c1 | c2)
    x[c1] = x0 * v[c1] / a1
    hat[c1] = k1
    if lam > 0:
        x[c2] = (x0 ** lam + (v[c2] - a1) * lam / k2) ** (1.0 / lam)
    else:
        x[c2] = omega * np.exp((v[c2] - a1) * math.exp(omega))
    hat[c2] = k2 * x[c2] ** (lam - 1.0)
    z = math.exp(-xs * omega / 2.0) - omega * (v[c3] - a1 - a2) / (2.0 * k3)
    x[c3] = -2.0 / omega * np.log(z)
    hat[c3] = k3 * np.exp(-x[c3] * omega / 2.0)
    with np.errstate(divide="ignore"):
        accept = np.log(u * hat) <= _log_quasi(x, lam, omega)
    return x[accept]


def standard_gig_rvs(p, theta, size, rng):
    """Variates with density proportional to x^(p-1) exp(-theta (x + 1/x) / 2)."""
    lam = abs(p)
    use_rou = lam >= 1.0 or theta > 1.0 or theta >= min(0.5, 2.0 * math.sqrt(1.0 - lam) / 3.0)
    setup = _rou_setup(lam, theta) if use_rou else None
    out = np.empty(size)
    have = 0
    while have < size:
        need = size - have
        k = int(need * 1.5) + 32
        if use_rou:
            draws = _rou_draws(k, rng, lam, theta, setup)
        else:
            draws = _hat_draws(k, rng, lam, theta)
        take = min(need, draws.size)
        out[have:have + take] = draws[:take]
        have += take
    return 1.0 / out if p < 0 else out


def _gig_chunk(params):
    if params.branch == GAMMA:
        scale = 2.0 / params.a
        return lambda size, rng, k: rng.gamma(params.p, scale, size)
    if params.branch != FULL:
        scale = 2.0 / params.b
        return lambda size, rng, k: 1.0 / rng.gamma(-params.p, scale, size)
    theta, eta = params.theta, params.eta
    return lambda size, rng, k: eta * standard_gig_rvs(params.p, theta, size, rng)


def gig_tag(params):
    return f"GIG(p={params.p!r}, a={params.a!r}, b={params.b!r})"


def sample_gig(params, n, plan, workers=1):
    """Exact i.i.d. GIG(p, a, b) variates (all three branches)."""
    n = _check_count(n)
    parts = map_chunks(_gig_chunk(params), _chunk_sizes(n), plan, workers)
    return SampleBatch(np.concatenate(parts), gig_tag(params), plan)


def ks_test(values, params):
    """One-sample Kolmogorov-Smirnov test against GIG(p, a, b)."""
    values = values.values if isinstance(values, SampleBatch) else np.asarray(values)
    return stats.kstest(values, lambda x: cdf(params, x))


# --------------------------------------------------------------------------
# continued-fraction Markov chain


@dataclass(frozen=True)
class ChainState:
    m: int
    value: float

    def __post_init__(self):
        if self.m < 0 or not self.value > 0:
            raise GigDomainError("chain index must be >= 0 and value > 0")


def _check_chain_params(p, a, b):
    if not (p > 0 and a > 0 and b > 0):
        raise GigDomainError("the continued-fraction chain needs p, a, b > 0")


def _use_single_gamma(a, b, form):
    if form not in ("auto", "general", "single"):
        raise GigDomainError(f"unknown chain form {form!r}")
    if form == "single" and a != b:
        raise GigDomainError("the single-Gamma recursion requires a == b")
    return form == "single" or (form == "auto" and a == b)


def chain_step(x, p, a, b, rng, form="auto"):
    """One transition of the chain whose stationary law is GIG(-p, a, b).

    With a == b (or ``form="single"``) this is X' = 1/(Y + X), Y ~ Gamma(p, a/2);
    otherwise X' = 1/(Y1 + 1/(Y2 + X)) with Y1 ~ Gamma(p, b/2) and
    Y2 ~ Gamma(p, a/2), drawn in that order.
    """
    _check_chain_params(p, a, b)
    x = np.asarray(x, dtype=float)
    if _use_single_gamma(a, b, form):
        return 1.0 / (rng.gamma(p, 2.0 / a, x.shape) + x)
    y1 = rng.gamma(p, 2.0 / b, x.shape)
    y2 = rng.gamma(p, 2.0 / a, x.shape)
    return 1.0 / (y1 + 1.0 / (y2 + x))


def _run_chain(start, p, a, b, checkpoints, rng, form):
    x = start
    out = {}
    if 0 in checkpoints:
        out[0] = x.copy()
    last = max(checkpoints)
    for step in range(1, last + 1):
        x = chain_step(x, p, a, b, rng, form)
        if step in checkpoints:
            out[step] = x
    return out


def chain_path(p, a, b, checkpoints, n, plan, init=None, workers=1, form="auto"):
    """X_m for every m in ``checkpoints`` along the same n replicate paths.

    Returns a dict m -> SampleBatch.  Replicate blocks are seeded per chunk.
    """
    _check_chain_params(p, a, b)
    n = _check_count(n)
    checkpoints = sorted({int(m) for m in checkpoints})
    if not checkpoints or checkpoints[0] < 0:
        raise GigDomainError("chain step counts must be nonnegative")
    init = math.sqrt(b / a) if init is None else float(init)
    if not init > 0:
        raise GigDomainError("chain initial value must be positive")
    cps = set(checkpoints)

    def chunk(size, rng, k):
        return _run_chain(np.full(size, init), p, a, b, cps, rng, form)

    parts = map_chunks(chunk, _chunk_sizes(n), plan, workers)
    result = {}
    for m in checkpoints:
        values = np.concatenate([part[m] for part in parts])
        tag = f"ContinuedFraction(p={p!r}, a={a!r}, b={b!r}, m={m}, init={init!r})"
        result[m] = SampleBatch(values, tag, plan, degenerate=(m == 0),
                                meta={"steps": m, "init": init})
    return result


def chain_iterates(p, a, b, m, n, plan, init=None, workers=1, form="auto"):
    """n independent replicates of X_m started from ``init`` (default sqrt(b/a))."""
    return chain_path(p, a, b, [m], n, plan, init, workers, form)[int(m)]


def advance_chain(batch, p, a, b, steps, plan, workers=1, form="auto"):
    """Push every value of ``batch`` through ``steps`` chain transitions."""
    _check_chain_params(p, a, b)
    values = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    sizes = _chunk_sizes(values.size)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def chunk(size, rng, k):
        start = values[offsets[k]:offsets[k] + size].copy()
        return _run_chain(start, p, a, b, {int(steps)}, rng, form)[int(steps)]

    out = np.concatenate(map_chunks(chunk, sizes, plan, workers))
    tag = f"ContinuedFractionStep(p={p!r}, a={a!r}, b={b!r}, steps={int(steps)})"
    return SampleBatch(out, tag, plan, meta={"steps": int(steps)})

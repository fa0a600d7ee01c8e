"""One-dimensional transition kernels and exact samplers.

Continuous side: the diffusions with generators ``x f'' + beta f'`` (free)
and ``x f'' + (beta - x) f'`` (stationary).  The free density is evaluated
as a Poisson mixture of Gamma densities::

    q_t(x, y) = sum_k Poisson(k; x/t) * Gamma(y; k + beta, scale=t)

and the stationary one through the space-time change
``Y_t = exp(-t) X_{exp(t) - 1}``.

Discrete side: birth-death chains on {0, 1, ...}, with rates

* free:        up ``n + beta``,           down ``n``
* stationary:  up ``sigma (n + beta)``,   down ``(sigma + 1) n``

whose transition matrices are computed by uniformization on a truncated
state space ``{0, ..., M-1}`` (mass leaving through ``M-1`` is killed, so the
truncated kernel is substochastic and its row deficit bounds the error).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .scalar_math import DomainError, gamma_logpdf

FREE = "free"
STATIONARY = "stationary"
CHAIN_KINDS = (FREE, STATIONARY)

# relative truncation error of the Poisson-Gamma series
MIXTURE_REL_TOL = 1e-15
DEFAULT_FLAG_TOL = 1e-10


class PointMassKernel(DomainError):
    """Raised when a density is requested at t = 0, where the kernel is a point mass."""


@dataclass(frozen=True)
class DiffusionParams:
    beta: float
    t: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not self.t >= 0:
            raise DomainError(f"t must be >= 0, got {self.t}")


@dataclass(frozen=True)
class ChainParams:
    beta: float
    t: float
    sigma: float = 1.0
    truncation: int | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not self.t >= 0:
            raise DomainError(f"t must be >= 0, got {self.t}")
        if self.truncation is not None and self.truncation < 1:
            raise DomainError("truncation must be a positive integer")


@dataclass(frozen=True)
class KernelEval:
    """A kernel value with an absolute error bound.

    ``flagged`` is set when the bound exceeds the tolerance the evaluator
    was asked to meet.
    """

    value: float
    error_bound: float = 0.0
    flagged: bool = False

    def __float__(self) -> float:
        return float(self.value)


# ---------------------------------------------------------------------------
# continuous kernels


def _mixture_range(beta, t, x, y):
    # terms ~ u**(2k) / (k! Gamma(k+beta)) peak near k = u and have spread sqrt(u/2)
    u = np.sqrt(np.max(x) * np.max(y)) / t
    u_lo = np.sqrt(np.min(x) * np.min(y)) / t
    k_hi = int(math.ceil(u + 12.0 * math.sqrt(u + 1.0) + 40.0))
    k_lo = max(0, int(math.floor(u_lo - 12.0 * math.sqrt(u_lo + 1.0) - 40.0)))
    return k_lo, k_hi


def q_logdensity(beta: float, t: float, x, y):
    """Log of the free transition density ``q_t(x, y)``; broadcasts ``x`` against ``y``."""
    if t == 0:
        raise PointMassKernel("q_t at t = 0 is a point mass")
    if not t > 0 or not beta > 0:
        raise DomainError("need beta > 0 and t > 0")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("q_t is defined on [0, inf)")
    if x.size == 0:
        return np.empty(x.shape)
    k_lo, k_hi = _mixture_range(beta, t, x, y)
    k = np.arange(k_lo, k_hi + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    lam = x / t
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (
            special.xlogy(k, lam)
            - lam
            - special.gammaln(k + 1)
            + special.xlogy(k + beta - 1, y)
            - y / t
            - special.gammaln(k + beta)
            - (k + beta) * math.log(t)
        )
    out = special.logsumexp(terms, axis=0)
    return float(out) if out.ndim == 0 else out


def q_density(p: DiffusionParams, x, y):
    """Free transition density ``q_t(x, y)``."""
    return np.exp(q_logdensity(p.beta, p.t, x, y))


def q_sample(p: DiffusionParams, x, rng: np.random.Generator, size=None):
    """Exact draw from ``q_t(x, .)``: ``K ~ Poisson(x/t)``, ``Y ~ Gamma(K + beta, t)``."""
    if p.t == 0:
        return np.broadcast_to(np.asarray(x, dtype=float), size or np.shape(x)).copy()
    k = rng.poisson(np.asarray(x, dtype=float) / p.t, size=size)
    return rng.gamma(k + p.beta, p.t)


def k_logdensity(beta: float, t: float, x, y):
    """Log of the stationary transition density ``k_t(x, y) = e^t q_{e^t - 1}(x, e^t y)``."""
    if t == 0:
        raise PointMassKernel("k_t at t = 0 is a point mass")
    if not t > 0:
        raise DomainError("need t > 0")
    return t + q_logdensity(beta, math.expm1(t), x, math.exp(t) * np.asarray(y, dtype=float))


def k_density(p: DiffusionParams, x, y):
    return np.exp(k_logdensity(p.beta, p.t, x, y))


def k_sample(p: DiffusionParams, x, rng: np.random.Generator, size=None):
    if p.t == 0:
        return np.broadcast_to(np.asarray(x, dtype=float), size or np.shape(x)).copy()
    inner = DiffusionParams(p.beta, math.expm1(p.t))
    return math.exp(-p.t) * q_sample(inner, x, rng, size=size)


def laguerre_weight_logpdf(beta: float, x):
    """Log density of the Gamma(beta, 1) law, the reversible measure of the stationary diffusion."""
    return gamma_logpdf(x, beta, 1.0)


# ---------------------------------------------------------------------------
# birth-death chains


def bd_rates(kind: str, beta: float, sigma: float, n):
    """Birth and death rates at states ``n``."""
    n = np.asarray(n, dtype=float)
    if kind == FREE:
        return n + beta, n.copy()
    if kind == STATIONARY:
        return sigma * (n + beta), (sigma + 1.0) * n
    raise ValueError(f"unknown chain kind {kind!r}")


def choose_truncation(kind: str, beta: float, t: float, max_state: int, sigma: float = 1.0) -> int:
    """Heuristic state-space size so that mass escaping by time ``t`` is negligible.

    The heuristic only needs to be generous; the returned kernel certifies
    itself through its row deficits and the doubling check.
    """
    x = float(max_state)
    if kind == FREE:
        mean = x + beta * t
        sd = math.sqrt(2.0 * t * x + beta * t * (1.0 + t))
        # geometric tail ratio t/(1+t) of the law at time t
        decay = math.log1p(1.0 / t) if t > 0 else math.inf
    else:
        mean = max(x, beta * sigma)
        sd = math.sqrt(x * (2.0 * sigma + 1.0) * min(t, 1.0) + beta * sigma * (1.0 + sigma))
        decay = math.log1p(1.0 / sigma)
    extra = 40.0 / decay if math.isfinite(decay) else 0.0
    return int(math.ceil(mean + 10.0 * sd + extra)) + 10


def _uniformize(kind, beta, sigma, t, M):
    """exp(t Q) for the truncated generator, with a bound on the series tail.

    The Poisson-weighted power series of ``P = I + Q / lam`` is summed at the
    short time ``t / 2**k`` (``lam t / 2**k <= 1``), then squared ``k`` times.
    All matrices involved are entrywise nonnegative, so squaring cannot
    cancel; the dropped series mass is at most ``2**k`` times the per-step tail.
    """
    n = np.arange(M)
    up, down = bd_rates(kind, beta, sigma, n)
    out_rate = up + down
    lam = float(out_rate.max())
    diag = 1.0 - out_rate / lam
    up_p = up[:-1] / lam  # n -> n+1
    down_p = down[1:] / lam  # n -> n-1
    n_sq = max(0, int(math.ceil(math.log2(lam * t)))) if lam * t > 1 else 0
    mean = lam * t / 2**n_sq
    n_max = int(math.ceil(mean + 12.0 * math.sqrt(mean) + 25.0))
    weights = stats.poisson.pmf(np.arange(n_max + 1), mean)
    tail = float(stats.poisson.sf(n_max, mean)) * 2**n_sq
    result = np.zeros((M, M))
    term = np.eye(M)
    nxt = np.empty_like(term)
    for w in weights:
        result += w * term
        # term <- term @ P, P tridiagonal
        np.multiply(term, diag, out=nxt)
        nxt[:, 1:] += term[:, :-1] * up_p
        nxt[:, :-1] += term[:, 1:] * down_p
        term, nxt = nxt, term
    for _ in range(n_sq):
        result = result @ result
    return result, tail


def _uniformized_action(kind, beta, sigma, t, M, vecs, side):
    """``exp(t Q) V`` (``side="right"``, V of shape (M, k)) or ``V exp(t Q)``
    (``side="left"``, V of shape (k, M)) on the truncated space, by the
    Poisson-weighted series of ``P = I + Q / lam`` applied to vectors.

    Returns the product and the dropped series mass.
    """
    n = np.arange(M)
    up, down = bd_rates(kind, beta, sigma, n)
    out_rate = up + down
    lam = float(out_rate.max())
    diag = 1.0 - out_rate / lam
    up_p = up[:-1] / lam
    down_p = down[1:] / lam
    mean = lam * t
    n_max = int(math.ceil(mean + 12.0 * math.sqrt(mean) + 25.0))
    weights = stats.poisson.pmf(np.arange(n_max + 1), mean)
    tail = float(stats.poisson.sf(n_max, mean))
    term = np.array(vecs, dtype=float)
    result = np.zeros_like(term)
    nxt = np.empty_like(term)
    start = int(np.argmax(weights > 1e-300))
    for k, w in enumerate(weights):
        if k >= start:
            result += w * term
        if side == "right":
            # (P v)_n = diag_n v_n + up_n v_{n+1} + down_n v_{n-1}
            np.multiply(term, diag[:, None], out=nxt)
            nxt[:-1] += up_p[:, None] * term[1:]
            nxt[1:] += down_p[:, None] * term[:-1]
        else:
            # (u P)_m = u_m diag_m + u_{m-1} up_{m-1} + u_{m+1} down_{m+1}
            np.multiply(term, diag[None, :], out=nxt)
            nxt[:, 1:] += term[:, :-1] * up_p[None, :]
            nxt[:, :-1] += term[:, 1:] * down_p[None, :]
        term, nxt = nxt, term
    return result, tail


def bd_columns(kind: str, beta: float, t: float, cols, *, sigma: float = 1.0, max_state: int = 0,
               truncation: int | None = None):
    """Columns ``y`` of the chain kernel at time ``t`` for all starting states.

    Returns ``(values, row_bound)`` where ``values[x, j]`` approximates
    ``p_t(x, cols[j])`` for ``x < M`` and ``row_bound[x]`` bounds the error of
    every entry in row ``x`` (row deficit of the killed chain plus series tail).
    """
    cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
    if kind == FREE:
        sigma = 1.0
    M = truncation or choose_truncation(kind, beta, t, max(max_state, int(cols.max(initial=0))), sigma)
    if t == 0:
        return np.eye(M)[:, cols], np.zeros(M)
    vecs = np.zeros((M, len(cols) + 1))
    vecs[cols, np.arange(len(cols))] = 1.0
    vecs[:, -1] = 1.0
    out, tail = _uniformized_action(kind, beta, sigma, t, M, vecs, "right")
    bound = np.clip(1.0 - out[:, -1], 0.0, None) + tail
    return out[:, :-1], bound


def bd_rows(kind: str, beta: float, t: float, rows, *, sigma: float = 1.0, max_state: int = 0,
            truncation: int | None = None):
    """Rows ``x`` of the chain kernel at time ``t``.

    Returns ``(values, row_bound)`` with ``values[i, y] ~ p_t(rows[i], y)``
    for ``y < M`` and ``row_bound[i]`` bounding every entry error in that row.
    """
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    if kind == FREE:
        sigma = 1.0
    M = truncation or choose_truncation(kind, beta, t, max(max_state, int(rows.max(initial=0))), sigma)
    vecs = np.zeros((len(rows), M))
    vecs[np.arange(len(rows)), rows] = 1.0
    if t == 0:
        return vecs, np.zeros(len(rows))
    out, tail = _uniformized_action(kind, beta, sigma, t, M, vecs, "left")
    bound = np.clip(1.0 - out.sum(axis=1), 0.0, None) + tail
    return out, bound


@dataclass(frozen=True)
class ChainKernel:
    """Truncated transition matrix of a birth-death chain at a fixed time.

    ``row_bound[x]`` bounds ``|matrix[x, y] - true(x, y)|`` for every ``y``.
    """

    kind: str
    beta: float
    sigma: float
    t: float
    matrix: np.ndarray
    row_bound: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x, y):
        return self.matrix[x, y]


@lru_cache(maxsize=64)
def _chain_kernel(kind, beta, sigma, t, M, certify):
    if t == 0:
        mat = np.eye(M)
        bound = np.zeros(M)
    else:
        mat, tail = _uniformize(kind, beta, sigma, t, M)
        deficit = np.clip(1.0 - mat.sum(axis=1), 0.0, None)
        bound = deficit + tail
        if certify:
            big, tail2 = _uniformize(kind, beta, sigma, t, 2 * M)
            diff = np.abs(big[:M, :M] - mat).max(axis=1)
            bound = np.maximum(bound, diff + tail2)
    mat.setflags(write=False)
    bound.setflags(write=False)
    return ChainKernel(kind, beta, sigma, t, mat, bound)


def bd_kernel(
    kind: str,
    beta: float,
    t: float,
    *,
    sigma: float = 1.0,
    max_state: int = 0,
    truncation: int | None = None,
    certify: bool = True,
) -> ChainKernel:
    """Transition matrix of the free or stationary chain at time ``t``.

    ``max_state`` is the largest state the caller intends to read; it
    drives the adaptive truncation when ``truncation`` is not given.
    """
    if kind not in CHAIN_KINDS:
        raise ValueError(f"unknown chain kind {kind!r}")
    if not beta > 0 or not sigma > 0 or not t >= 0:
        raise DomainError("need beta > 0, sigma > 0, t >= 0")
    if kind == FREE:
        sigma = 1.0
    M = truncation or choose_truncation(kind, beta, t, max_state, sigma)
    return _chain_kernel(kind, float(beta), float(sigma), float(t), int(M), certify)


def _bd_entry(kind, p: ChainParams, x, y, tol):
    for v in (x, y):
        if v < 0 or int(v) != v:
            raise DomainError(f"states must be non-negative integers, got {v}")
    M = p.truncation or choose_truncation(kind, p.beta, p.t, max(x, y), p.sigma)
    if x >= M or y >= M:
        raise DomainError(f"states ({x}, {y}) outside truncation M={M}")
    ker = bd_kernel(kind, p.beta, p.t, sigma=p.sigma, truncation=M)
    bound = float(ker.row_bound[x])
    return KernelEval(float(ker.matrix[x, y]), bound, bound > tol)


def bd_free_kernel(p: ChainParams, x: int, y: int, tol: float = DEFAULT_FLAG_TOL) -> KernelEval:
    """Transition probability of the free chain (up ``n + beta``, down ``n``)."""
    return _bd_entry(FREE, p, x, y, tol)


def bd_stat_kernel(p: ChainParams, x: int, y: int, tol: float = DEFAULT_FLAG_TOL) -> KernelEval:
    """Transition probability of the stationary chain (up ``sigma (n + beta)``, down ``(sigma+1) n``)."""
    return _bd_entry(STATIONARY, p, x, y, tol)


def bd_sample_path(p: ChainParams, x0: int, horizon: float, rng: np.random.Generator, kind: str = FREE):
    """Exact jump path on ``[0, horizon]`` via exponential clocks.

    Returns ``(times, states)``; ``times[0] == 0`` and ``states[i]`` holds on
    ``[times[i], times[i+1])``.
    """
    times = [0.0]
    states = [int(x0)]
    s, n = 0.0, int(x0)
    while True:
        up, down = bd_rates(kind, p.beta, p.sigma, n)
        total = float(up + down)
        s += rng.exponential(1.0 / total)
        if s > horizon:
            break
        n += 1 if rng.random() * total < up else -1
        times.append(s)
        states.append(n)
    return np.array(times), np.array(states)


def bd_sample_marginal(p: ChainParams, x0, horizon: float, rng: np.random.Generator, size: int, kind: str = FREE):
    """State at ``horizon`` of ``size`` independent paths (vectorised Gillespie)."""
    n = np.full(size, x0, dtype=np.int64) if np.ndim(x0) == 0 else np.array(x0, dtype=np.int64)
    clock = np.zeros(n.shape)
    alive = np.ones(n.shape, dtype=bool)
    while alive.any():
        idx = np.flatnonzero(alive)
        up, down = bd_rates(kind, p.beta, p.sigma, n[idx])
        total = up + down
        clock[idx] += rng.exponential(1.0 / total)
        done = clock[idx] > horizon
        alive[idx[done]] = False
        jump = idx[~done]
        u = rng.random(jump.size) * total[~done]
        n[jump] += np.where(u < up[~done], 1, -1)
    return n

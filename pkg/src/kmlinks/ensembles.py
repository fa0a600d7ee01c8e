"""Laguerre and Meixner ensembles: densities, normalisations and samplers.

Laguerre:  ``nu(x) = Delta(x)^2 prod Gamma(beta, 1)-pdf(x_i) / Z`` on the
continuous chamber ``0 <= x_1 <= ... <= x_N``.

Meixner:   ``eta(y) = Delta(y)^2 prod NegBin(beta, sigma)(y_i) / Z'`` on the
discrete chamber ``0 <= y_1 < ... < y_N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .links import lambda_sample
from .scalar_math import DomainError, gamma_logpdf, neg_binomial_logpmf
from .weyl import coords, discrete_chamber, log_vandermonde_batch

MEIXNER_TAIL = 1e-13
MCMC_BURN_IN = 10_000
MCMC_THIN = 10
MCMC_STEP = 0.5
MCMC_CHAINS = 64


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    beta: float
    sigma: float = 1.0

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise DomainError("N must be a positive integer")
        if not self.beta > 0 or not self.sigma > 0:
            raise DomainError("beta and sigma must be positive")


# ---------------------------------------------------------------------------
# Laguerre


def laguerre_log_normalizer(n: int, beta: float) -> float:
    """Log of ``int_{chamber} Delta^2 prod nu_beta(x_i) dx``.

    Over the whole orthant the integral is
    ``prod_{j=1}^{N} Gamma(j+1) Gamma(beta+j-1) / Gamma(beta)^N``; the ordered
    chamber carries a fraction ``1/N!`` of it.
    """
    j = np.arange(1, n + 1)
    full = float(np.sum(special.gammaln(j + 1.0) + special.gammaln(beta + j - 1.0)) - n * special.gammaln(beta))
    return full - math.lgamma(n + 1)


def laguerre_logdensity(p: EnsembleParams, x):
    """Log density of the Laguerre ensemble; ``x`` is ``(N,)`` or ``(K, N)``.

    Points off the ordered chamber or with ties get ``-inf``.
    """
    x = np.asarray(coords(x) if not isinstance(x, np.ndarray) else x, dtype=float)
    sign, logv = log_vandermonde_batch(x)
    log_w = np.sum(gamma_logpdf(x, p.beta), axis=-1)
    with np.errstate(invalid="ignore"):
        out = 2.0 * logv + log_w - laguerre_log_normalizer(p.n, p.beta)
    ordered = np.all(np.diff(x, axis=-1) > 0, axis=-1) & (x[..., 0] >= 0)
    out = np.where(ordered & (sign > 0), out, -np.inf)
    return float(out) if out.ndim == 0 else out


def laguerre_density(p: EnsembleParams, x):
    return np.exp(laguerre_logdensity(p, x))


def _wishart_eigs(p: EnsembleParams, rng, size):
    cols = p.n + int(round(p.beta)) - 1
    g = (rng.standard_normal((size, p.n, cols)) + 1j * rng.standard_normal((size, p.n, cols))) / math.sqrt(2.0)
    h = g @ np.conj(np.swapaxes(g, -1, -2))
    return np.linalg.eigvalsh(h)


def _mcmc(p: EnsembleParams, rng, size, burn_in, thin, chains, step):
    chains = max(1, min(chains, size))
    per_chain = -(-size // chains)
    # start from a spread-out ordered configuration
    x = np.tile(np.arange(1, p.n + 1, dtype=float) * max(p.beta, 1.0), (chains, 1))
    logp = laguerre_logdensity(p, x)
    out = np.empty((chains, per_chain, p.n))
    n_iter = burn_in + per_chain * thin
    kept = 0
    for it in range(n_iter):
        for i in range(p.n):
            xi = x[:, i]
            prop_i = xi + step * np.sqrt(xi) * rng.standard_normal(chains)
            prop = x.copy()
            prop[:, i] = prop_i
            ok = prop_i > 0
            logp_new = np.full(chains, -np.inf)
            if ok.any():
                logp_new[ok] = laguerre_logdensity(p, prop[ok])
            with np.errstate(divide="ignore", invalid="ignore"):
                # proposal N(x, step^2 x) is not symmetric
                fwd = -((prop_i - xi) ** 2) / (2 * step**2 * xi) - 0.5 * np.log(xi)
                bwd = -((xi - prop_i) ** 2) / (2 * step**2 * prop_i) - 0.5 * np.log(prop_i)
                log_ratio = logp_new - logp + bwd - fwd
            accept = ok & (np.log(rng.random(chains)) < log_ratio)
            x[accept] = prop[accept]
            logp[accept] = logp_new[accept]
        if it >= burn_in and (it - burn_in) % thin == thin - 1:
            out[:, kept] = x
            kept += 1
    return out.reshape(-1, p.n)[:size]


def laguerre_sample(p: EnsembleParams, rng: np.random.Generator, size: int = 1, method: str = "auto",
                    burn_in: int = MCMC_BURN_IN, thin: int = MCMC_THIN, chains: int = MCMC_CHAINS,
                    step: float = MCMC_STEP) -> np.ndarray:
    """Draw ``size`` points of the Laguerre ensemble, shape ``(size, N)``.

    ``method="wishart"`` (integer beta): sorted eigenvalues of ``G G^†`` with
    ``G`` an ``N x (N + beta - 1)`` matrix of standard complex Gaussians.
    ``method="mcmc"``: random-walk Metropolis inside the ordered chamber,
    proposals ``x_i + step sqrt(x_i) Z``, run as ``chains`` parallel chains.
    ``"auto"`` picks the exact path when beta is an integer.
    """
    is_int = float(p.beta).is_integer()
    if method == "auto":
        method = "wishart" if is_int else "mcmc"
    if size == 0:
        return np.empty((0, p.n))
    if method == "wishart":
        if not is_int:
            raise DomainError("the Wishart sampler needs an integer beta; use method='mcmc'")
        return _wishart_eigs(p, rng, size)
    if method == "mcmc":
        return _mcmc(p, rng, size, burn_in, thin, chains, step)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Meixner


def _negbin_tail_bound(n, beta, sigma, start):
    """Bound on ``sum_{m >= start} m^{N(N-1)} eta(m)``."""
    power = n * (n - 1)
    m = np.arange(start, start + 20000, dtype=float)
    logt = special.xlogy(power, m) + neg_binomial_logpmf(m, beta, sigma)
    tail = float(np.exp(special.logsumexp(logt)))
    # terms past the window decay geometrically with ratio below (1+r)/2
    r = sigma / (1.0 + sigma)
    last = float(np.exp(logt[-1]))
    return tail + last * 2.0 / (1.0 - r)


@lru_cache(maxsize=128)
def meixner_log_normalizer(n: int, beta: float, sigma: float) -> tuple[float, float]:
    """``(log Z, relative tail bound)`` for the Meixner ensemble, by direct
    summation over the discrete chamber.

    The omitted part (``y_N >= L``) is bounded by
    ``sum_{m >= L} m^{N(N-1)} eta(m)`` since ``Delta(y)^2 <= y_N^{N(N-1)}``.
    """
    mean = beta * sigma
    sd = math.sqrt(beta * sigma * (1 + sigma))
    L = int(math.ceil(mean + 6 * sd)) + n + 5
    while True:
        ys = discrete_chamber(n, L)
        sign, logv = log_vandermonde_batch(ys)
        logw = neg_binomial_logpmf(ys, beta, sigma).sum(axis=-1)
        log_z = float(special.logsumexp(2 * logv + logw))
        tail = _negbin_tail_bound(n, beta, sigma, L)
        rel = tail / math.exp(log_z)
        if rel < MEIXNER_TAIL:
            return log_z, rel
        L = int(L * 1.25) + 1


def meixner_logpmf(p: EnsembleParams, y):
    """Log pmf of the Meixner ensemble; ``y`` is ``(N,)`` or ``(K, N)``.
    Non-strict or negative points get ``-inf``."""
    y = np.asarray(coords(y) if not isinstance(y, np.ndarray) else y)
    if np.any(y != np.floor(y)):
        raise DomainError("Meixner points are integer vectors")
    sign, logv = log_vandermonde_batch(y.astype(float))
    valid = np.all(np.diff(y, axis=-1) > 0, axis=-1) & (y[..., 0] >= 0)
    safe = np.where(y < 0, 0, y).astype(np.int64)
    logw = neg_binomial_logpmf(safe, p.beta, p.sigma).sum(axis=-1)
    log_z, _ = meixner_log_normalizer(p.n, float(p.beta), float(p.sigma))
    out = np.where(valid, 2 * logv + logw - log_z, -np.inf)
    return float(out) if out.ndim == 0 else out


def meixner_pmf(p: EnsembleParams, y):
    return np.exp(meixner_logpmf(p, y))


def meixner_table(p: EnsembleParams, tail_eps: float = 1e-12):
    """Enumerated Meixner pmf with missing mass below ``tail_eps``."""
    mean = p.beta * p.sigma
    sd = math.sqrt(p.beta * p.sigma * (1 + p.sigma))
    L = int(math.ceil(mean + 8 * sd)) + p.n + 10
    while True:
        ys = discrete_chamber(p.n, L)
        probs = meixner_pmf(p, ys)
        if 1.0 - probs.sum() < tail_eps:
            return np.array(ys), probs
        L = int(L * 1.3) + 1


def meixner_sample(p: EnsembleParams, rng: np.random.Generator, size: int = 1,
                   method: str = "pushforward", **laguerre_kw) -> np.ndarray:
    """Draw ``size`` Meixner points, shape ``(size, N)``.

    ``"pushforward"``: ``x ~ Laguerre(N, beta)`` then ``y ~ Lambda_N(sigma x, .)``.
    ``"enumeration"``: inverse CDF over the enumerated pmf.
    """
    if size == 0:
        return np.empty((0, p.n), dtype=np.int64)
    if method == "enumeration":
        ys, probs = meixner_table(p)
        cdf = np.cumsum(probs)
        idx = np.minimum(np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right"), len(cdf) - 1)
        return ys[idx]
    if method != "pushforward":
        raise ValueError(f"unknown method {method!r}")
    xs = laguerre_sample(EnsembleParams(p.n, p.beta), rng, size, **laguerre_kw)
    out = np.empty((size, p.n), dtype=np.int64)
    for k, x in enumerate(xs):
        out[k] = lambda_sample(p.sigma * np.sort(x), rng)
    return out

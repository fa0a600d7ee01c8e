"""Markov links between the continuous and the discrete chamber.

* ``Lambda_N(x, y) = Delta(y)/Delta(x) det[Poisson(y_j; x_i)]`` from the
  continuous chamber to the discrete one;
* ``Lambda_{N,sigma}(x, y) = Lambda_N(sigma x, y)``;
* ``Lambda*_{N,beta}(y, dx) = Delta(x)/Delta(y) det[Gamma(x_i; y_j + beta)] dx``
  in the opposite direction.

At coincident ``x`` the first link is evaluated through the factorisation
``Delta(y) prod e^{-x_i} prod 1/y_j! s_y(x)`` with ``s_y`` a Schur polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .scalar_math import DomainError, EnumerationBudgetError, batched_logdet, gamma_logpdf, logdet_from_log_entries
from .weyl import (
    SchurEvaluator,
    coords,
    discrete_chamber,
    log_vandermonde,
    log_vandermonde_batch,
    use_combinatorial_branch,
)

LAMBDA_SAMPLE_MAX_N = 4


@dataclass(frozen=True)
class LinkParams:
    n: int
    beta: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("N must be a positive integer")
        if not self.beta > 0 or not self.sigma > 0:
            raise DomainError("beta and sigma must be positive")


def _check_discrete(y):
    y = coords(y).astype(np.int64)
    if np.any(y < 0):
        raise DomainError(f"discrete coordinates must be non-negative: {y}")
    return y


def _check_continuous(x):
    x = coords(x).astype(float)
    if np.any(x < 0) or np.any(np.diff(x) < 0):
        raise DomainError(f"not in the continuous chamber: {x}")
    return x


def _lambda_det(x, y) -> float:
    dy = log_vandermonde(y)
    if dy.sign <= 0:
        return 0.0
    with np.errstate(divide="ignore"):
        log_entries = special.xlogy(y[None, :], x[:, None]) - x[:, None] - special.gammaln(y[None, :] + 1.0)
    det = logdet_from_log_entries(log_entries)
    return (dy * det / log_vandermonde(x)).value


def _lambda_schur(x, y, evaluator=None) -> float:
    dy = log_vandermonde(y)
    if dy.sign <= 0:
        return 0.0
    n = len(y)
    lam = tuple(int(y[n - 1 - i]) - (n - 1 - i) for i in range(n))
    s = (evaluator or SchurEvaluator(x))(lam)
    if s == 0.0:
        return 0.0
    log_rest = dy.log_value - float(x.sum()) - float(special.gammaln(y + 1.0).sum())
    return s * math.exp(log_rest)


def lambda_n(x, y, method: str = "auto") -> float:
    """``Lambda_N(x, y)``; ``x`` may lie on the chamber boundary.

    ``method`` is ``"auto"``, ``"determinant"`` or ``"schur"``.
    Returns 0 for ``y`` that is not strictly increasing.
    """
    x = _check_continuous(x)
    y = _check_discrete(y)
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")
    if method == "auto":
        method = "schur" if use_combinatorial_branch(x) else "determinant"
    if method == "determinant":
        if len(x) > 1 and np.any(np.diff(x) == 0):
            raise ZeroDivisionError("determinant form undefined at coincident x; use method='schur'")
        return _lambda_det(x, y)
    if method == "schur":
        return _lambda_schur(x, y)
    raise ValueError(f"unknown method {method!r}")


def lambda_n_batch(x, ys) -> np.ndarray:
    """``Lambda_N(x, y)`` for every row of ``ys`` (shape ``(K, N)``)."""
    x = _check_continuous(x)
    ys = np.asarray(ys, dtype=np.int64)
    if use_combinatorial_branch(x):
        ev = SchurEvaluator(x)
        return np.array([_lambda_schur(x, y, ev) for y in ys])
    yf = ys.astype(float)
    with np.errstate(divide="ignore"):
        log_entries = (
            special.xlogy(yf[:, None, :], x[None, :, None])
            - x[None, :, None]
            - special.gammaln(yf[:, None, :] + 1.0)
        )
    sign, logdet = batched_logdet(log_entries)
    ysign, ylog = log_vandermonde_batch(yf)
    dx = log_vandermonde(x)
    out = sign * ysign * np.exp(logdet + ylog - dx.log_value)
    return np.where((sign == 0) | (ysign <= 0), 0.0, out)


def lambda_n_sigma(sigma: float, x, y, method: str = "auto") -> float:
    """``Lambda_{N,sigma}(x, y) = Lambda_N(sigma x, y)``."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return lambda_n(sigma * _check_continuous(x), y, method=method)


def lambda_star(beta: float, y, x) -> float:
    """Density of ``Lambda*_{N,beta}(y, .)`` at ``x``; zero at coincident ``x``."""
    y = _check_discrete(y)
    x = _check_continuous(x)
    dx = log_vandermonde(x)
    dy = log_vandermonde(y)
    if dx.sign == 0 or dy.sign <= 0:
        return 0.0
    log_entries = gamma_logpdf(x[:, None], y[None, :] + beta)
    log_entries = np.atleast_2d(log_entries)
    det = logdet_from_log_entries(log_entries)
    return (dx * det / dy).value


def lambda_star_batch(beta: float, y, xs) -> np.ndarray:
    y = _check_discrete(y)
    xs = np.asarray(xs, dtype=float)
    log_entries = gamma_logpdf(xs[..., :, None], (y + beta)[None, :])
    sign, logdet = batched_logdet(log_entries)
    xsign, xlog = log_vandermonde_batch(xs)
    dy = log_vandermonde(y)
    with np.errstate(over="ignore", invalid="ignore"):
        out = sign * xsign * np.exp(logdet + xlog - dy.log_value)
    return np.where((sign == 0) | (xsign == 0), 0.0, out)


def lambda_table(x, tail_eps: float = 1e-12, max_states: int = 2_000_000):
    """Enumerate ``Lambda_N(x, .)`` on ``W_d ∩ [0, M)^N``, growing ``M`` until
    the missing mass is below ``tail_eps``.  Returns ``(ys, probs)``."""
    x = _check_continuous(x)
    n = len(x)
    top = float(x.max())
    m = int(math.ceil(top + 10.0 * math.sqrt(top) + n + 15))
    while True:
        if math.comb(m, n) > max_states:
            raise EnumerationBudgetError(m, n)
        ys = discrete_chamber(n, m)
        probs = lambda_n_batch(x, ys)
        if 1.0 - probs.sum() < tail_eps:
            return np.array(ys), probs
        m = int(m * 1.3) + 2


def lambda_sample(x, rng: np.random.Generator, tail_eps: float = 1e-12, size=None,
                  max_states: int = 2_000_000):
    """Exact draw(s) from ``Lambda_N(x, .)`` by inverse CDF over an enumeration.

    Returns one point as an int array of shape ``(N,)`` or ``size`` points as ``(size, N)``.
    """
    x = _check_continuous(x)
    if len(x) > LAMBDA_SAMPLE_MAX_N:
        raise DomainError(f"lambda_sample supports N <= {LAMBDA_SAMPLE_MAX_N}")
    ys, probs = lambda_table(x, tail_eps, max_states)
    order = np.argsort(-probs, kind="stable")
    cdf = np.cumsum(probs[order])
    u = rng.random(size) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return ys[order[idx]]

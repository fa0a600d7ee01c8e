"""Doob h-transformed Karlin-McGregor kernels on the N-point chambers.

All four kernels share the shape::

    prefactor(t) * Delta(y) / Delta(x) * det[p_t(x_i, y_j)]

with ``prefactor = 1`` for the free dynamics and ``exp(N(N-1) t / 2)`` for
the stationary ones.
"""
from __future__ import annotations

import math

import numpy as np

from .kernels1d import (
    FREE,
    STATIONARY,
    KernelEval,
    PointMassKernel,
    bd_kernel,
    bd_rows,
    choose_truncation,
    k_logdensity,
    q_logdensity,
)
from .scalar_math import DomainError, EnumerationBudgetError, batched_logdet
from .weyl import coords, discrete_chamber, log_vandermonde, log_vandermonde_batch

__all__ = [
    "KernelEval",
    "q_nd",
    "k_nd",
    "bd_nd_free",
    "bd_nd_stat",
    "q_nd_batch",
    "k_nd_batch",
    "bd_nd_table",
    "det_error_bound",
]

# relative accuracy of one continuous kernel entry (series truncation + rounding)
CONT_ENTRY_REL_ERR = 1e-14


def det_error_bound(A, E) -> float:
    """First-order bound on ``|det(A + D) - det(A)|`` for ``|D_ij| <= E_ij``.

    Cofactors are bounded by Hadamard's inequality over the remaining rows.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    n = A.shape[0]
    if n == 1:
        return float(E[0, 0])
    norms = np.linalg.norm(A, axis=1) + np.linalg.norm(E, axis=1)
    bound = 0.0
    for i in range(n):
        others = np.prod(np.delete(norms, i))
        bound += float(E[i].sum()) * others
    return bound + 4 * n * np.finfo(float).eps * float(np.prod(norms))


def _stationary_prefactor(n, t):
    return n * (n - 1) / 2.0 * t


def _km_eval(log_entries, entry_err_rel, log_pre, x, y, abs_entry_err=None) -> KernelEval:
    """Evaluate ``exp(log_pre) * Delta(y)/Delta(x) * det(exp(log_entries))``."""
    dy = log_vandermonde(y)
    if dy.sign == 0:
        return KernelEval(0.0, 0.0)
    dx = log_vandermonde(x)
    row_max = np.max(log_entries, axis=1)
    if np.any(row_max == -np.inf):
        return KernelEval(0.0, 0.0)
    scaled = np.exp(log_entries - row_max[:, None])
    if abs_entry_err is None:
        err = entry_err_rel * scaled
    else:
        err = abs_entry_err * np.exp(-row_max)[:, None]
    det = float(np.linalg.det(scaled))
    log_scale = float(row_max.sum()) + log_pre + dy.log_value - dx.log_value
    scale = math.exp(log_scale) * dy.sign * dx.sign
    bound = det_error_bound(scaled, err) * abs(scale)
    return KernelEval(det * scale, bound)


def _check_interior(x):
    x = coords(x).astype(float)
    if np.any(np.diff(x) <= 0):
        raise DomainError(f"x must be strictly increasing (interior point), got {x}")
    if x[0] < 0:
        raise DomainError("x must be non-negative")
    return x


def q_nd(beta: float, t: float, x, y) -> KernelEval:
    """Density of the non-colliding free system at ``y`` started from interior ``x``."""
    if t == 0:
        raise PointMassKernel("q^N_t at t = 0 is a point mass")
    x = _check_interior(x)
    y = coords(y).astype(float)
    log_entries = q_logdensity(beta, t, x[:, None], y[None, :])
    return _km_eval(log_entries, CONT_ENTRY_REL_ERR, 0.0, x, y)


def k_nd(beta: float, t: float, x, y) -> KernelEval:
    """Density of the non-colliding stationary system at ``y`` started from interior ``x``."""
    if t == 0:
        raise PointMassKernel("k^N_t at t = 0 is a point mass")
    x = _check_interior(x)
    y = coords(y).astype(float)
    log_entries = k_logdensity(beta, t, x[:, None], y[None, :])
    return _km_eval(log_entries, CONT_ENTRY_REL_ERR, _stationary_prefactor(len(x), t), x, y)


def _bd_nd(kind, beta, sigma, t, x, y, M):
    x = coords(x).astype(np.int64)
    y = coords(y).astype(np.int64)
    for v in (x, y):
        if np.any(v < 0) or np.any(np.diff(v) <= 0):
            raise DomainError(f"not in the discrete chamber: {v}")
    if t == 0:
        return KernelEval(float(np.array_equal(x, y)), 0.0)
    top = int(max(x.max(), y.max()))
    M = M or choose_truncation(kind, beta, t, top, sigma)
    if top >= M:
        raise DomainError(f"coordinates must lie below the truncation M={M}")
    ker = bd_kernel(kind, beta, t, sigma=sigma, truncation=M)
    sub = ker.matrix[np.ix_(x, y)]
    err = np.repeat(ker.row_bound[x][:, None], len(y), axis=1)
    with np.errstate(divide="ignore"):
        log_entries = np.log(sub)
    n = len(x)
    pre = _stationary_prefactor(n, t) if kind == STATIONARY else 0.0
    if np.any(np.max(log_entries, axis=1) == -np.inf):
        return KernelEval(0.0, float(err.max()))
    return _km_eval(log_entries, None, pre, x, y, abs_entry_err=err)


def bd_nd_free(beta: float, t: float, x, y, M: int | None = None) -> KernelEval:
    """Transition probability of N non-intersecting free birth-death chains."""
    return _bd_nd(FREE, beta, 1.0, t, x, y, M)


def bd_nd_stat(beta: float, sigma: float, t: float, x, y, M: int | None = None) -> KernelEval:
    """Transition probability of N non-intersecting stationary birth-death chains."""
    return _bd_nd(STATIONARY, beta, sigma, t, x, y, M)


# ---------------------------------------------------------------------------
# vectorised forms used by quadrature, enumeration and sampling


def _km_batch(log_entries, log_pre, x, ys):
    """``exp(log_pre) Delta(y)/Delta(x) det(...)`` for a stack of ``y``."""
    sign, logdet = batched_logdet(log_entries)
    ysign, ylog = log_vandermonde_batch(ys)
    dx = log_vandermonde(x)
    with np.errstate(invalid="ignore", over="ignore"):
        out = sign * ysign * dx.sign * np.exp(logdet + ylog - dx.log_value + log_pre)
    return np.where((sign == 0) | (ysign == 0), 0.0, out)


def q_nd_batch(beta: float, t: float, x, ys) -> np.ndarray:
    """:func:`q_nd` values for ``ys`` of shape ``(..., N)``."""
    x = _check_interior(x)
    ys = np.asarray(ys, dtype=float)
    log_entries = q_logdensity(beta, t, x[:, None], ys[..., None, :])
    return _km_batch(log_entries, 0.0, x, ys)


def k_nd_batch(beta: float, t: float, x, ys) -> np.ndarray:
    x = _check_interior(x)
    ys = np.asarray(ys, dtype=float)
    log_entries = k_logdensity(beta, t, x[:, None], ys[..., None, :])
    return _km_batch(log_entries, _stationary_prefactor(len(x), t), x, ys)


def bd_nd_table(kind: str, beta: float, t: float, x, *, sigma: float = 1.0,
                tail_eps: float = 1e-12, max_states: int = 2_000_000):
    """All chamber points ``y`` reachable from ``x`` with their probabilities.

    The enumeration box grows until the enumerated mass is within
    ``tail_eps`` of one.  Returns ``(ys, probs)``.
    """
    x = coords(x).astype(np.int64)
    n = len(x)
    if t == 0:
        return x[None, :].copy(), np.ones(1)
    box = int(x.max()) + n + 10
    while True:
        M = choose_truncation(kind, beta, t, 2 * box, sigma)
        if math.comb(box, n) > max_states:
            raise EnumerationBudgetError(box, n)
        rows, _ = bd_rows(kind, beta, t, x, sigma=sigma, truncation=M)
        ys = discrete_chamber(n, box)
        sub = rows[:, ys]  # (N, K, N)
        sub = np.moveaxis(sub, 1, 0)  # (K, N, N): rows x_i, cols y_j
        with np.errstate(divide="ignore"):
            log_entries = np.log(sub)
        pre = _stationary_prefactor(n, t) if kind == STATIONARY else 0.0
        probs = _km_batch(log_entries, pre, x, ys)
        if 1.0 - probs.sum() < tail_eps:
            return np.array(ys), probs
        box = int(box * 1.5) + 1

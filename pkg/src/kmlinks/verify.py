"""Numerical certification of the intertwining, factorisation, invariance and
pushforward identities.

Each N-dimensional identity is reduced by the Andreif (Cauchy-Binet)
identity to a determinant of one-dimensional integrals or sums, so every
check boils down to comparing two ``N x N`` matrices built along disjoint
routes: adaptive quadrature on one side, truncated summation against
uniformized chain kernels on the other.
"""
from __future__ import annotations

import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .ensembles import (
    EnsembleParams,
    laguerre_density,
    laguerre_log_normalizer,
    meixner_log_normalizer,
    meixner_pmf,
)
from .kernels1d import FREE, STATIONARY, bd_columns, bd_rows, k_logdensity, q_logdensity
from .km_nd import CONT_ENTRY_REL_ERR, det_error_bound, k_nd, q_nd, bd_nd_free
from .links import lambda_n, lambda_star_batch, lambda_table
from .quadrature import QuadratureError, chamber_quad2, integrate_halfline
from .scalar_math import gamma_logpdf, neg_binomial_logpmf, poisson_logpmf
from .weyl import coords, log_vandermonde

INTERTWINING_TOL = {1: 1e-9, 2: 1e-7, 3: 1e-6}
FACTORIZATION_TOL = {1: 1e-7, 2: 1e-7, 3: 1e-6}
INVARIANCE_TOL = {1: 1e-8, 2: 1e-6, 3: 1e-6}
PUSHFORWARD_REL_TOL = 1e-6
LAMBDA_NORM_TOL = 1e-10
STAR_NORM_TOL = 1e-7
BOUNDARY_SCHUR_TOL = 1e-8
BOUNDARY_CAUCHY_TOL = 1e-6

GRID_BETAS = (0.5, 1.0, 2.5)
GRID_SIGMAS = (0.5, 1.0, 2.0)
GRID_TIMES = (0.1, 0.5, 1.0, 2.0)
GRID_NS = (1, 2, 3)

# continuous / discrete chamber points per N used by the suites
X_GRID = {1: [(0.5,), (2.0,)], 2: [(0.5, 2.0), (1.0, 3.0)], 3: [(0.5, 1.5, 3.0)]}
Y_GRID = {1: [(0,), (3,)], 2: [(0, 2), (1, 3)], 3: [(0, 2, 4)]}


class CheckFailure(RuntimeError):
    pass


@dataclass
class CheckReport:
    """Outcome of one identity over a grid of evaluation points."""

    identity_name: str
    grid: list = field(default_factory=list)
    max_abs_residual: float = 0.0
    max_rel_residual: float = 0.0
    tolerance: float = 0.0
    error_bound: float = 0.0
    relative: bool = False
    passed: bool = True
    wall_time: float = 0.0

    @property
    def residual(self) -> float:
        return self.max_rel_residual if self.relative else self.max_abs_residual

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [_jsonable(g) for g in self.grid]
        return d

    @classmethod
    def single(cls, name, point, lhs, rhs, bound, tol, relative=False, wall_time=0.0):
        abs_res = abs(lhs - rhs)
        rel_res = abs_res / max(abs(rhs), 1e-300)
        entry = dict(point, lhs=lhs, rhs=rhs, abs_residual=abs_res, rel_residual=rel_res, error_bound=bound)
        res = rel_res if relative else abs_res
        # a residual is accepted below the tolerance or within ten times the
        # propagated numerical bound, whichever is larger
        passed = bool(res <= max(tol, 10.0 * bound))
        return cls(name, [entry], abs_res, rel_res, tol, bound, relative, passed, wall_time)


def merge_reports(name: str, reports) -> CheckReport:
    reports = list(reports)
    if not reports:
        raise ValueError("cannot merge an empty list of reports")
    return CheckReport(
        identity_name=name,
        grid=[g for r in reports for g in r.grid],
        max_abs_residual=max(r.max_abs_residual for r in reports),
        max_rel_residual=max(r.max_rel_residual for r in reports),
        tolerance=max(r.tolerance for r in reports),
        error_bound=max(r.error_bound for r in reports),
        relative=reports[0].relative,
        passed=all(r.passed for r in reports),
        wall_time=sum(r.wall_time for r in reports),
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# Andreif reduction


@dataclass
class ComposedMatrix:
    matrix: np.ndarray
    bound: np.ndarray


def andreif_compose(f, g, domain: str, *, lower_exponent: float = 0.0, cutoff: float = 50.0,
                    upper: int | None = None, f_err=None, g_err=None) -> ComposedMatrix:
    """Matrix of pairwise 1-D integrals ``int f_i g_j`` or sums ``sum_w f_i(w) g_j(w)``.

    Continuous: ``f(z)`` and ``g(z)`` map a scalar to ``(N,)`` arrays; the
    integral runs over ``(0, inf)``.  Discrete: they map an integer array
    ``w`` of length K to ``(N, K)`` arrays; the sum runs over ``[0, upper)``
    and the slab ``[upper, 2 upper)`` is summed too as a tail certificate.
    ``f_err``/``g_err`` optionally give absolute errors of the discrete
    factors with the same shapes.
    """
    if domain == "continuous":
        try:
            val, err = integrate_halfline(lambda z: np.outer(f(z), g(z)), lower_exponent=lower_exponent,
                                          cutoff=cutoff)
        except QuadratureError:
            _locate_failure(f, g, lower_exponent, cutoff)
            raise
        val = np.atleast_2d(val)
        bound = np.full(val.shape, err) + CONT_ENTRY_REL_ERR * np.abs(val)
        return ComposedMatrix(val, bound)
    if domain == "discrete":
        if upper is None:
            raise ValueError("discrete composition needs an upper summation limit")
        w = np.arange(upper)
        F, G = np.atleast_2d(f(w)), np.atleast_2d(g(w))
        val = F @ G.T
        wt = np.arange(upper, 2 * upper)
        tail = np.abs(np.atleast_2d(f(wt))) @ np.abs(np.atleast_2d(g(wt))).T
        bound = tail + 1e-15 * (np.abs(F) @ np.abs(G).T)
        if f_err is not None:
            bound = bound + np.atleast_2d(f_err(w)) @ np.abs(G).T
        if g_err is not None:
            bound = bound + np.abs(F) @ np.atleast_2d(g_err(w)).T
        return ComposedMatrix(val, bound)
    raise ValueError(f"unknown domain {domain!r}")


def _locate_failure(f, g, lower_exponent, cutoff):
    """Re-run a failed matrix quadrature entrywise and name the first bad entry."""
    n_rows, n_cols = len(np.atleast_1d(f(1.0))), len(np.atleast_1d(g(1.0)))
    for i, j in itertools.product(range(n_rows), range(n_cols)):
        try:
            integrate_halfline(lambda z: np.atleast_1d(f(z))[i] * np.atleast_1d(g(z))[j],
                               lower_exponent=lower_exponent, cutoff=cutoff)
        except QuadratureError as exc:
            raise QuadratureError(f"entry ({i}, {j}): {exc}") from exc


def _det_side(comp: ComposedMatrix, log_pre: float, sign: int = 1):
    pre = sign * math.exp(log_pre)
    det = float(np.linalg.det(comp.matrix))
    return det * pre, det_error_bound(comp.matrix, comp.bound) * abs(pre)


def _poisson_upper(mean: float) -> int:
    return int(math.ceil(mean + 12.0 * math.sqrt(mean) + 40.0))


def _cutoff(*scales, t=0.0):
    return 2.0 * (sum(scales) + 10.0) * (1.0 + t)


# ---------------------------------------------------------------------------
# intertwinings


def _prefactor(num, den):
    """log |Delta(num)/Delta(den)| and its sign."""
    a, b = log_vandermonde(num), log_vandermonde(den)
    return a.log_value - b.log_value, a.sign * b.sign


def check_intertwining_free(beta: float, t: float, x, y) -> CheckReport:
    """``Q_t Lambda_N = Lambda_N Qd_t`` at the point pair ``(x, y)``."""
    start = time.perf_counter()
    x = coords(x).astype(float)
    y = coords(y).astype(np.int64)
    n = len(x)
    name = f"intertwining_free[N={n}]"
    point = dict(beta=beta, t=t, x=x.tolist(), y=y.tolist())
    tol = INTERTWINING_TOL.get(n, INTERTWINING_TOL[3])
    if t == 0:
        v = lambda_n(x, y)
        return CheckReport.single(name, point, v, v, 0.0, tol)
    log_pre, sign = _prefactor(y, x)
    lhs = andreif_compose(
        lambda z: np.exp(q_logdensity(beta, t, x, z)),
        lambda z: np.exp(poisson_logpmf(y, z)),
        "continuous",
        lower_exponent=beta - 1.0,
        cutoff=_cutoff(x.max(), y.max(), beta * t, t=t),
    )
    upper = _poisson_upper(x.max())
    cols, cb = bd_columns(FREE, beta, t, y, max_state=2 * upper)
    rhs = andreif_compose(
        lambda w: np.exp(poisson_logpmf(w[None, :], x[:, None])),
        lambda w: cols[w].T,
        "discrete",
        upper=upper,
        g_err=lambda w: np.repeat(cb[w][None, :], n, axis=0),
    )
    lv, lb = _det_side(lhs, log_pre, sign)
    rv, rb = _det_side(rhs, log_pre, sign)
    return CheckReport.single(name, point, lv, rv, lb + rb, tol, wall_time=time.perf_counter() - start)


def check_intertwining_star(beta: float, t: float, y, x) -> CheckReport:
    """``Qd_t Lambda* = Lambda* Q_t`` as densities at ``x``, starting from ``y``."""
    start = time.perf_counter()
    x = coords(x).astype(float)
    y = coords(y).astype(np.int64)
    n = len(x)
    name = f"intertwining_star[N={n}]"
    point = dict(beta=beta, t=t, y=y.tolist(), x=x.tolist())
    tol = INTERTWINING_TOL.get(n, INTERTWINING_TOL[3])
    if log_vandermonde(x).sign == 0:
        return CheckReport.single(name, point, 0.0, 0.0, 0.0, tol)
    if t == 0:
        v = float(lambda_star_batch(beta, y, x[None, :])[0])
        return CheckReport.single(name, point, v, v, 0.0, tol)
    log_pre, sign = _prefactor(x, y)
    upper = _poisson_upper(x.max() + beta)
    rows, rb = bd_rows(FREE, beta, t, y, truncation=2 * upper)
    lhs = andreif_compose(
        lambda w: rows[:, w],
        lambda w: np.exp(gamma_logpdf(x[:, None], w[None, :] + beta)),
        "discrete",
        upper=upper,
        f_err=lambda w: np.repeat(rb[:, None], len(w), axis=1),
    )
    rhs = andreif_compose(
        lambda z: np.exp(gamma_logpdf(z, y + beta)),
        lambda z: np.exp(q_logdensity(beta, t, z, x)),
        "continuous",
        lower_exponent=beta - 1.0,
        cutoff=_cutoff(x.max(), y.max(), beta, t=t),
    )
    lv, lb = _det_side(lhs, log_pre, sign)
    rv, rb = _det_side(rhs, log_pre, sign)
    return CheckReport.single(name, point, lv, rv, lb + rb, tol, wall_time=time.perf_counter() - start)


def check_intertwining_stationary(beta: float, sigma: float, t: float, x, y) -> CheckReport:
    """``K_t Lambda_{N,sigma} = Lambda_{N,sigma} Kd_t`` at ``(x, y)``."""
    start = time.perf_counter()
    x = coords(x).astype(float)
    y = coords(y).astype(np.int64)
    n = len(x)
    name = f"intertwining_stationary[N={n}]"
    point = dict(beta=beta, sigma=sigma, t=t, x=x.tolist(), y=y.tolist())
    tol = INTERTWINING_TOL.get(n, INTERTWINING_TOL[3])
    if t == 0:
        v = lambda_n(sigma * x, y)
        return CheckReport.single(name, point, v, v, 0.0, tol)
    c = n * (n - 1) / 2.0
    log_pre, sign = _prefactor(y, x)
    log_pre += c * t - c * math.log(sigma)
    lhs = andreif_compose(
        lambda z: np.exp(k_logdensity(beta, t, x, z)),
        lambda z: np.exp(poisson_logpmf(y, sigma * z)),
        "continuous",
        lower_exponent=beta - 1.0,
        cutoff=_cutoff(x.max(), y.max() / sigma, beta, t=t),
    )
    upper = _poisson_upper(sigma * x.max())
    cols, cb = bd_columns(STATIONARY, beta, t, y, sigma=sigma, max_state=2 * upper)
    rhs = andreif_compose(
        lambda w: np.exp(poisson_logpmf(w[None, :], sigma * x[:, None])),
        lambda w: cols[w].T,
        "discrete",
        upper=upper,
        g_err=lambda w: np.repeat(cb[w][None, :], n, axis=0),
    )
    lv, lb = _det_side(lhs, log_pre, sign)
    rv, rb = _det_side(rhs, log_pre, sign)
    return CheckReport.single(name, point, lv, rv, lb + rb, tol, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# factorisations through time one


def check_factorization_q1(beta: float, x, y, side: str = "continuous") -> CheckReport:
    """``Lambda_N Lambda*_{N,beta} = Q_1`` (side ``"continuous"``: ``x, y`` continuous)
    or ``Lambda*_{N,beta} Lambda_N = Qd_1`` (side ``"discrete"``: ``x, y`` discrete)."""
    start = time.perf_counter()
    n = len(coords(x))
    tol = FACTORIZATION_TOL.get(n, FACTORIZATION_TOL[3])
    if side == "continuous":
        x = coords(x).astype(float)
        y = coords(y).astype(float)
        name = f"factorization_continuous[N={n}]"
        point = dict(beta=beta, x=x.tolist(), y=y.tolist())
        log_pre, sign = _prefactor(y, x)
        comp = andreif_compose(
            lambda w: np.exp(poisson_logpmf(w[None, :], x[:, None])),
            lambda w: np.exp(gamma_logpdf(y[:, None], w[None, :] + beta)),
            "discrete",
            upper=_poisson_upper(max(x.max(), y.max())),
        )
        lv, lb = _det_side(comp, log_pre, sign)
        ref = q_nd(beta, 1.0, x, y)
    elif side == "discrete":
        x = coords(x).astype(np.int64)
        y = coords(y).astype(np.int64)
        name = f"factorization_discrete[N={n}]"
        point = dict(beta=beta, x=x.tolist(), y=y.tolist())
        log_pre, sign = _prefactor(y, x)
        comp = andreif_compose(
            lambda z: np.exp(gamma_logpdf(z, x + beta)),
            lambda z: np.exp(poisson_logpmf(y, z)),
            "continuous",
            lower_exponent=beta - 1.0,
            cutoff=_cutoff(x.max(), y.max(), beta),
        )
        lv, lb = _det_side(comp, log_pre, sign)
        ref = bd_nd_free(beta, 1.0, x, y)
    else:
        raise ValueError(f"unknown side {side!r}")
    return CheckReport.single(name, point, lv, ref.value, lb + ref.error_bound, tol,
                              wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# invariant measures


def check_invariance(which: str, beta: float, t: float, y, sigma: float = 1.0) -> CheckReport:
    """``nu K_t = nu`` (``which="laguerre"``) or ``eta Kd_t = eta`` (``"meixner"``) at ``y``."""
    start = time.perf_counter()
    n = len(coords(y))
    c = n * (n - 1) / 2.0
    tol = INVARIANCE_TOL.get(n, INVARIANCE_TOL[3])
    powers = np.arange(n)[:, None]
    if which == "laguerre":
        y = coords(y).astype(float)
        name = f"invariance_laguerre[N={n}]"
        point = dict(beta=beta, t=t, y=y.tolist())
        dy = log_vandermonde(y)
        log_pre = c * t + dy.log_value - laguerre_log_normalizer(n, beta)
        comp = andreif_compose(
            lambda z: z ** powers[:, 0] * math.exp(gamma_logpdf(z, beta)),
            lambda z: np.exp(k_logdensity(beta, t, z, y)),
            "continuous",
            lower_exponent=beta - 1.0,
            cutoff=_cutoff(y.max(), beta + 4 * n),
        )
        lv, lb = _det_side(comp, log_pre, dy.sign)
        rhs = float(laguerre_density(EnsembleParams(n, beta), y))
    elif which == "meixner":
        y = coords(y).astype(np.int64)
        name = f"invariance_meixner[N={n}]"
        point = dict(beta=beta, sigma=sigma, t=t, y=y.tolist())
        dy = log_vandermonde(y)
        log_z, _ = meixner_log_normalizer(n, float(beta), float(sigma))
        log_pre = c * t + dy.log_value - log_z
        mean = beta * sigma
        upper = int(math.ceil(mean + 30 * math.sqrt(mean * (1 + sigma)) + 40 + 60 * sigma)) + int(y.max())
        cols, cb = bd_columns(STATIONARY, beta, t, y, sigma=sigma, max_state=2 * upper)
        comp = andreif_compose(
            lambda w: w[None, :].astype(float) ** powers * np.exp(neg_binomial_logpmf(w, beta, sigma))[None, :],
            lambda w: cols[w].T,
            "discrete",
            upper=upper,
            g_err=lambda w: np.repeat(cb[w][None, :], n, axis=0),
        )
        lv, lb = _det_side(comp, log_pre, dy.sign)
        rhs = float(meixner_pmf(EnsembleParams(n, beta, sigma), y))
    else:
        raise ValueError(f"unknown measure {which!r}")
    return CheckReport.single(name, point, lv, rhs, lb, tol, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Laguerre -> Meixner


def pushforward_andreif(beta: float, sigma: float, y) -> tuple[float, float]:
    """``[nu Lambda_{N,sigma}](y)`` through the Andreif reduction; returns ``(value, bound)``."""
    y = coords(y).astype(np.int64)
    n = len(y)
    c = n * (n - 1) / 2.0
    dy = log_vandermonde(y)
    if dy.sign <= 0:
        return 0.0, 0.0
    powers = np.arange(n)
    comp = andreif_compose(
        lambda z: z**powers * math.exp(gamma_logpdf(z, beta)),
        lambda z: np.exp(poisson_logpmf(y, sigma * z)),
        "continuous",
        lower_exponent=beta - 1.0,
        cutoff=_cutoff(y.max() / sigma, beta + 4 * n),
    )
    log_pre = dy.log_value - c * math.log(sigma) - laguerre_log_normalizer(n, beta)
    return _det_side(comp, log_pre)


def pushforward_direct(beta: float, sigma: float, y, n_outer: int = 80, n_inner: int = 60) -> float:
    """``[nu Lambda_{2,sigma}](y)`` by direct quadrature over the 2-D chamber."""
    y = coords(y).astype(np.int64)
    if len(y) != 2:
        raise ValueError("the direct chamber route is implemented for N = 2")
    p = EnsembleParams(2, beta)

    def integrand(x1, x2):
        xs = np.stack([x1, x2], axis=-1).reshape(-1, 2)
        dens = laguerre_density(p, xs)
        lam = np.array([lambda_n(sigma * pt, y, method="determinant") if d > 0 else 0.0 for pt, d in zip(xs, dens)])
        return (dens * lam).reshape(x1.shape)

    return chamber_quad2(integrand, exponent=beta - 1.0, rate=1.0 + sigma, n_outer=n_outer, n_inner=n_inner)


def check_pushforward(beta: float, sigma: float, y, route: str = "andreif") -> CheckReport:
    """``[nu_beta^N Lambda_{N,sigma}](y) = eta_{beta,sigma}^N(y)`` (relative residual)."""
    start = time.perf_counter()
    y = coords(y).astype(np.int64)
    n = len(y)
    rhs = float(meixner_pmf(EnsembleParams(n, beta, sigma), y))
    if route == "andreif":
        lhs, bound = pushforward_andreif(beta, sigma, y)
    elif route == "direct":
        lhs, bound = pushforward_direct(beta, sigma, y), 0.0
    else:
        raise ValueError(f"unknown route {route!r}")
    point = dict(beta=beta, sigma=sigma, y=y.tolist(), route=route)
    return CheckReport.single(f"pushforward_{route}[N={n}]", point, lhs, rhs, bound, PUSHFORWARD_REL_TOL,
                              relative=True, wall_time=time.perf_counter() - start)


def check_pushforward_routes(beta: float, sigma: float, y) -> CheckReport:
    """Agreement of the Andreif and direct routes at N = 2 (relative)."""
    start = time.perf_counter()
    a, bound = pushforward_andreif(beta, sigma, y)
    d = pushforward_direct(beta, sigma, y)
    point = dict(beta=beta, sigma=sigma, y=list(map(int, coords(y))))
    return CheckReport.single("pushforward_routes[N=2]", point, d, a, bound, PUSHFORWARD_REL_TOL,
                              relative=True, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# normalisation of the links


def check_lambda_normalization(x) -> CheckReport:
    """``sum_y Lambda_N(x, y) = 1`` by enumeration of the discrete chamber."""
    start = time.perf_counter()
    x = coords(x).astype(float)
    ys, probs = lambda_table(x, tail_eps=1e-13)
    point = dict(x=x.tolist(), n_terms=len(ys))
    total = float(math.fsum(probs))
    return CheckReport.single(f"normalization_lambda[N={len(x)}]", point, total, 1.0, 1e-13, LAMBDA_NORM_TOL,
                              wall_time=time.perf_counter() - start)


def check_star_normalization(beta: float, y, route: str = "andreif") -> CheckReport:
    """``int Lambda*_{N,beta}(y, dx) = 1``.

    ``route="andreif"``: determinant of 1-D Gamma moment integrals;
    ``route="direct"`` (N <= 2): quadrature of the density itself.
    """
    start = time.perf_counter()
    y = coords(y).astype(np.int64)
    n = len(y)
    point = dict(beta=beta, y=y.tolist(), route=route)
    if route == "andreif":
        powers = np.arange(n)
        comp = andreif_compose(
            lambda z: z**powers,
            lambda z: np.exp(gamma_logpdf(z, y + beta)),
            "continuous",
            lower_exponent=beta - 1.0,
            cutoff=_cutoff(y.max(), beta),
        )
        dy = log_vandermonde(y)
        total, bound = _det_side(comp, -dy.log_value)
    elif route == "direct":
        bound = 0.0
        if n == 1:
            total = float(integrate_halfline(lambda z: np.exp(gamma_logpdf(z, y + beta)),
                                             lower_exponent=beta - 1.0, cutoff=_cutoff(y.max(), beta))[0])
        elif n == 2:
            total = chamber_quad2(
                lambda x1, x2: lambda_star_batch(beta, y, np.stack([x1, x2], axis=-1)),
                exponent=beta - 1.0, rate=1.0, n_outer=120, n_inner=80,
            )
        else:
            raise ValueError("direct route implemented for N <= 2")
    else:
        raise ValueError(f"unknown route {route!r}")
    return CheckReport.single(f"normalization_star_{route}[N={n}]", point, total, 1.0, bound, STAR_NORM_TOL,
                              wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# boundary limits


@dataclass
class BoundaryLimit:
    kernel: str
    x_boundary: list
    y: list
    gaps: list
    values: list
    extrapolants: list
    limit: float
    cauchy: float
    reference: float | None
    converged: bool


def _neville(hs, vs):
    """Polynomial extrapolation of ``v(h)`` to ``h = 0``."""
    p = list(vs)
    n = len(hs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (hs[i + k] * p[i] - hs[i] * p[i + 1]) / (hs[i + k] - hs[i])
    return p[0]


def boundary_limit(kernel: str, x_boundary, y, gaps=None, *, beta: float = 1.0, t: float = 1.0,
                   sigma: float = 1.0, window: int = 4, cauchy_tol: float = BOUNDARY_CAUCHY_TOL) -> BoundaryLimit:
    """Limit of a kernel as ``x -> x_boundary`` along ``x_boundary + g (0, 1, ..., N-1)``.

    ``kernel`` is ``"lambda"``, ``"lambda_sigma"``, ``"q_nd"`` or ``"k_nd"``.
    Successive Neville extrapolants over a sliding window of ``window``
    gaps form the convergence sequence; for the links the limit is compared
    to the exact Schur-branch value.
    """
    xb = coords(x_boundary).astype(float)
    n = len(xb)
    if gaps is None:
        gaps = [0.2 * 2.0**-k for k in range(8)]
    gaps = [float(g) for g in gaps]
    if any(b >= a for a, b in zip(gaps, gaps[1:])) or gaps[-1] <= 0:
        raise ValueError("gaps must decrease strictly towards 0")
    offsets = np.arange(n, dtype=float)

    def value(xp):
        if kernel == "lambda":
            return lambda_n(xp, y, method="determinant")
        if kernel == "lambda_sigma":
            return lambda_n(sigma * xp, y, method="determinant")
        if kernel == "q_nd":
            return q_nd(beta, t, xp, y).value
        if kernel == "k_nd":
            return k_nd(beta, t, xp, y).value
        raise ValueError(f"unknown kernel {kernel!r}")

    values = [value(xb + g * offsets) for g in gaps]
    w = min(window, len(gaps))
    extrap = [_neville(gaps[i:i + w], values[i:i + w]) for i in range(len(gaps) - w + 1)]
    limit = extrap[-1]
    cauchy = abs(extrap[-1] - extrap[-2]) if len(extrap) > 1 else math.inf
    reference = None
    if kernel == "lambda":
        reference = lambda_n(xb, y, method="schur")
    elif kernel == "lambda_sigma":
        reference = lambda_n(sigma * xb, y, method="schur")
    return BoundaryLimit(kernel, xb.tolist(), list(map(float, coords(y))), gaps, values, extrap, limit,
                         cauchy, reference, bool(cauchy <= cauchy_tol))


def check_boundary(kernel: str, x_boundary, y, **kw) -> CheckReport:
    start = time.perf_counter()
    res = boundary_limit(kernel, x_boundary, y, **kw)
    n = len(res.x_boundary)
    point = dict(kernel=kernel, x=res.x_boundary, y=res.y, cauchy=res.cauchy,
                 **{k: v for k, v in kw.items() if k in ("beta", "t", "sigma")})
    if res.reference is not None:
        return CheckReport.single(f"boundary_{kernel}[N={n}]", point, res.limit, res.reference, 0.0,
                                  BOUNDARY_SCHUR_TOL, wall_time=time.perf_counter() - start)
    # q_nd / k_nd: the residual is the Cauchy gap of the extrapolated sequence
    return CheckReport.single(f"boundary_{kernel}[N={n}]", point, res.extrapolants[-1], res.extrapolants[-2],
                              0.0, BOUNDARY_CAUCHY_TOL, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# suites

IDENTITIES = (
    "intertwining_free",
    "intertwining_star",
    "intertwining_stationary",
    "factorization",
    "invariance",
    "pushforward",
    "normalization",
    "boundary",
)


def _tasks(identity, n_values, betas, sigmas, times):
    tasks = []
    if identity == "intertwining_free":
        for n, b, t in itertools.product(n_values, betas, times):
            for x, y in itertools.product(X_GRID[n], Y_GRID[n]):
                tasks.append((check_intertwining_free, (b, t, x, y), {}))
    elif identity == "intertwining_star":
        for n, b, t in itertools.product(n_values, betas, times):
            for y, x in itertools.product(Y_GRID[n], X_GRID[n]):
                tasks.append((check_intertwining_star, (b, t, y, x), {}))
    elif identity == "intertwining_stationary":
        for n, b, s, t in itertools.product(n_values, betas, sigmas, times):
            for x, y in itertools.product(X_GRID[n][:1], Y_GRID[n]):
                tasks.append((check_intertwining_stationary, (b, s, t, x, y), {}))
    elif identity == "factorization":
        cont_y = {1: (1.5,), 2: (0.5, 3.0), 3: (0.5, 2.0, 3.5)}
        for n, b in itertools.product(n_values, betas):
            for x in X_GRID[n]:
                tasks.append((check_factorization_q1, (b, x, cont_y[n]), {"side": "continuous"}))
            for x, y in itertools.product(Y_GRID[n], Y_GRID[n]):
                tasks.append((check_factorization_q1, (b, x, y), {"side": "discrete"}))
    elif identity == "invariance":
        cont_y = {1: (1.2,), 2: (0.7, 2.5), 3: (0.5, 1.5, 3.5)}
        for n, b, t in itertools.product(n_values, betas, times):
            tasks.append((check_invariance, ("laguerre", b, t, cont_y[n]), {}))
            for s in sigmas:
                tasks.append((check_invariance, ("meixner", b, t, Y_GRID[n][0]), {"sigma": s}))
    elif identity == "pushforward":
        for n, b, s in itertools.product(n_values, betas, sigmas):
            for y in Y_GRID[n]:
                tasks.append((check_pushforward, (b, s, y), {}))
            if n == 2:
                tasks.append((check_pushforward_routes, (b, s, Y_GRID[2][0]), {}))
    elif identity == "normalization":
        boundary_x = {1: [(0.0,)], 2: [(1.0, 1.0), (0.0, 0.0)], 3: [(1.0, 1.0, 2.5), (2.0, 2.0, 2.0)]}
        for n in n_values:
            for x in X_GRID[n] + boundary_x[n]:
                tasks.append((check_lambda_normalization, (x,), {}))
            for b in betas:
                for y in Y_GRID[n]:
                    tasks.append((check_star_normalization, (b, y), {}))
    elif identity == "boundary":
        for n in n_values:
            if n == 1:
                continue
            xb = (1.0,) * n
            for y in Y_GRID[n]:
                tasks.append((check_boundary, ("lambda", xb, y), {}))
            yc = tuple(0.5 + 1.5 * i for i in range(n))
            for b in betas:
                tasks.append((check_boundary, ("q_nd", xb, yc), {"beta": b, "t": 1.0}))
                tasks.append((check_boundary, ("k_nd", xb, yc), {"beta": b, "t": 0.5}))
    else:
        raise ValueError(f"unknown identity {identity!r}")
    return tasks


def run_suite(identities=IDENTITIES, n_max: int = 3, betas=GRID_BETAS, sigmas=GRID_SIGMAS,
              times=GRID_TIMES, workers: int | None = None, n_values=None) -> list[CheckReport]:
    """Run the requested identities over the grid; one merged report per identity and N."""
    if isinstance(identities, str):
        identities = IDENTITIES if identities == "all" else (identities,)
    n_values = tuple(n_values or (n for n in GRID_NS if n <= n_max))
    tasks = []
    for ident in identities:
        tasks.extend(_tasks(ident, n_values, betas, sigmas, times))
    workers = workers or os.cpu_count() or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda task: task[0](*task[1], **task[2]), tasks))
    else:
        results = [fn(*args, **kw) for fn, args, kw in tasks]
    grouped: dict[str, list] = {}
    for r in results:
        grouped.setdefault(r.identity_name, []).append(r)
    return [merge_reports(name, rs) for name, rs in grouped.items()]


def render_table(reports) -> str:
    """Aligned plain-text summary, one line per report."""
    header = f"{'identity':42s} {'points':>6s} {'residual':>10s} {'tolerance':>10s} {'bound':>10s} {'time[s]':>8s}  status"
    lines = [header, "-" * len(header)]
    for r in reports:
        kind = "rel" if r.relative else "abs"
        lines.append(
            f"{r.identity_name:42s} {len(r.grid):6d} {r.residual:10.2e} {r.tolerance:10.1e} "
            f"{r.error_bound:10.2e} {r.wall_time:8.2f}  {'PASS' if r.passed else 'FAIL'} ({kind})"
        )
    return "\n".join(lines)


def reports_to_json(reports, **meta) -> str:
    payload = dict(meta, reports=[r.to_dict() for r in reports],
                   all_passed=all(r.passed for r in reports))
    return json.dumps(payload, indent=2, default=_jsonable)

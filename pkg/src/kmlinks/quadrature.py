"""Quadrature on the half line and on the two-dimensional ordered chamber."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.integrate import quad_vec

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-13


class QuadratureError(RuntimeError):
    pass


def _power_for(exponent: float) -> float:
    """Substitution power making ``z**exponent dz`` smooth under ``z = u**p``."""
    beta = exponent + 1.0
    if beta <= 0:
        raise QuadratureError(f"non-integrable endpoint exponent {exponent}")
    if float(beta).is_integer():
        return 1.0
    if float(2 * beta).is_integer():
        return 2.0
    if beta < 1:
        return 1.0 / beta
    return 1.0


def integrate_halfline(f, *, lower_exponent: float = 0.0, cutoff: float = 50.0,
                       epsabs: float = QUAD_EPSABS, epsrel: float = QUAD_EPSREL):
    """Integrate an array-valued ``f`` over ``(0, inf)``.

    ``f(z)`` takes a scalar and returns an array; it may behave like
    ``z**lower_exponent`` at the origin.  The range is split at ``cutoff``,
    which should sit past the bulk of the integrand.
    Returns ``(value, abs_error_estimate)``.
    """
    p = _power_for(lower_exponent)
    tiny = 1e-300

    def g(u):
        z = u**p if p != 1.0 else u
        if z <= 0:
            z = tiny
        return f(z) * (p * u ** (p - 1.0) if p != 1.0 else 1.0)

    split = cutoff ** (1.0 / p)
    total, err = 0.0, 0.0
    for a, b in ((0.0, split), (split, math.inf)):
        val, e, info = quad_vec(g, a, b, epsabs=epsabs, epsrel=epsrel, limit=20000, full_output=True)
        # rounding-limited termination is harmless once the estimate is tiny
        if not info.success and not float(e) <= 1e-10 * max(1.0, float(np.max(np.abs(val)))):
            raise QuadratureError(f"quadrature did not converge on [{a}, {b}]: {info.message}")
        total = total + val
        err += float(e)
    return np.asarray(total), err


@lru_cache(maxsize=32)
def _genlaguerre(n, alpha):
    return special.roots_genlaguerre(n, alpha)


@lru_cache(maxsize=32)
def _jacobi(n, a, b):
    return special.roots_jacobi(n, a, b)


def chamber_quad2(f, *, exponent: float, rate: float, n_outer: int = 80, n_inner: int = 60):
    """Integrate ``f(y1, y2)`` over ``0 < y1 < y2 < inf``.

    ``f`` is vectorised and its values should look like
    ``(y1 y2)**exponent * exp(-rate (y1 + y2))`` times something smooth.
    The substitution ``y1 = s y2`` is followed by Gauss-Jacobi in ``s`` (weight
    ``s**exponent``) and generalised Gauss-Laguerre in ``y2``.
    Returns the integral; convergence is the caller's business (compare two
    node counts).
    """
    alpha = 2.0 * exponent + 1.0
    r, wr = _genlaguerre(n_outer, alpha)
    # roots_jacobi uses weight (1-x)^a (1+x)^b on [-1, 1]
    sj, wj = _jacobi(n_inner, 0.0, exponent)
    s = (sj + 1.0) / 2.0
    ws = wj / 2.0 ** (exponent + 1.0)
    y2 = r[:, None] / rate
    y1 = s[None, :] * y2
    y2 = np.broadcast_to(y2, y1.shape)
    vals = np.asarray(f(y1, y2), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_weight = (
            special.xlogy(exponent, s[None, :])
            + special.xlogy(alpha, r[:, None])
            - r[:, None]
        )
        # Jacobian of y1 = s y2 is y2; dy2 = dr / rate
        integrand = np.sign(vals) * np.exp(np.log(np.abs(vals)) - log_weight) * y2 / rate
    integrand = np.where(vals == 0, 0.0, integrand)
    return float(np.sum(wr[:, None] * ws[None, :] * integrand))

"""Shared oracles for the test suite (independent of the package internals)."""
import math

import numpy as np
from scipy import integrate, special, stats


def bessel_q(beta, t, x, y):
    """Free transition density from the modified Bessel function form."""
    if x == 0:
        return stats.gamma.pdf(y, beta, scale=t)
    nu = beta - 1.0
    arg = 2.0 * math.sqrt(x * y) / t
    return (1.0 / t) * (y / x) ** (nu / 2.0) * math.exp(-(x + y) / t + arg) * special.ive(nu, arg)


def free_chain_closed_form(beta, t, x, y):
    """Free chain transition probability.

    Started from ``x`` the chain is ``x`` independent critical linear
    birth-death families plus an immigration part.  Each family at time ``t``
    has ``P(0) = t/(1+t)`` and ``P(n) = (1+t)^-2 (t/(1+t))^(n-1)`` for
    ``n >= 1``; the immigration part is NegBin(beta) with success
    probability ``1/(1+t)``.
    """
    q = t / (1.0 + t)
    m = x + y + 1
    single = np.empty(m)
    single[0] = q
    single[1:] = (1.0 / (1.0 + t)) ** 2 * q ** np.arange(m - 1)
    dist = np.zeros(m)
    dist[0] = 1.0
    for _ in range(x):
        dist = np.convolve(dist, single)[:m]
    imm = stats.nbinom.pmf(np.arange(m), beta, 1.0 / (1.0 + t))
    return float(np.convolve(dist, imm)[y])


def expm_chain(kind, beta, sigma, t, M):
    """Dense matrix exponential of the truncated generator (killed at the top)."""
    from scipy.linalg import expm

    n = np.arange(M, dtype=float)
    if kind == "free":
        up, down = n + beta, n.copy()
    else:
        up, down = sigma * (n + beta), (sigma + 1.0) * n
    Q = np.diag(-(up + down)) + np.diag(up[:-1], 1) + np.diag(down[1:], -1)
    return expm(t * Q)


def quad(f, a=0.0, b=np.inf, **kw):
    kw.setdefault("epsabs", 1e-13)
    kw.setdefault("epsrel", 1e-12)
    kw.setdefault("limit", 500)
    return integrate.quad(f, a, b, **kw)[0]

"""Special functions and combinatorial primitives.

Everything with a factorial or Gamma function in it has a log-domain
implementation; the linear-domain wrappers exponentiate at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

STIRLING_MAX_N = 30


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class EnumerationBudgetError(DomainError):
    """Enumerating the discrete chamber would exceed the state budget."""

    def __init__(self, required_m: int, n: int):
        super().__init__(
            f"enumeration of the discrete chamber would need M={required_m} "
            f"({math.comb(required_m, n)} points for N={n})"
        )
        self.required_m = required_m


@dataclass(frozen=True)
class LogWeight:
    """A real number stored as ``sign * exp(log_value)``.

    ``sign == 0`` encodes an exact zero, in which case ``log_value`` is
    ``-inf``.
    """

    log_value: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign != 0 and not math.isfinite(self.log_value):
            raise ValueError("log_value must be finite for a nonzero weight")

    @classmethod
    def zero(cls) -> LogWeight:
        return cls(-math.inf, 0)

    @classmethod
    def from_value(cls, value: float) -> LogWeight:
        if value == 0:
            return cls.zero()
        return cls(math.log(abs(value)), 1 if value > 0 else -1)

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_value)

    def __mul__(self, other: LogWeight) -> LogWeight:
        if self.sign == 0 or other.sign == 0:
            return LogWeight.zero()
        return LogWeight(self.log_value + other.log_value, self.sign * other.sign)

    def __truediv__(self, other: LogWeight) -> LogWeight:
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogWeight")
        if self.sign == 0:
            return LogWeight.zero()
        return LogWeight(self.log_value - other.log_value, self.sign * other.sign)

    def __float__(self) -> float:
        return self.value


def log_gamma(z):
    """``ln Gamma(z)`` for ``z > 0`` (scalar or array)."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)):
        raise DomainError(f"log_gamma requires z > 0, got {z}")
    out = special.gammaln(z_arr)
    return float(out) if out.ndim == 0 else out


def _check_nonneg_int(k, name="k"):
    k_arr = np.asarray(k)
    if k_arr.dtype.kind == "f":
        if np.any(k_arr != np.floor(k_arr)):
            raise DomainError(f"{name} must be integer-valued, got {k}")
    if np.any(k_arr < 0):
        raise DomainError(f"{name} must be non-negative, got {k}")
    return k_arr


def poisson_logpmf(k, mean):
    """Log of ``mean**k * exp(-mean) / k!``; broadcasts over arrays.

    At ``mean == 0`` the law is a point mass at 0.
    """
    k_arr = _check_nonneg_int(k).astype(float)
    mean_arr = np.asarray(mean, dtype=float)
    if np.any(mean_arr < 0):
        raise DomainError(f"Poisson mean must be >= 0, got {mean}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.xlogy(k_arr, mean_arr) - mean_arr - special.gammaln(k_arr + 1)
    out = np.where((mean_arr == 0) & (k_arr > 0), -np.inf, out)
    return float(out) if out.ndim == 0 else out


def poisson_pmf(k, mean):
    return np.exp(poisson_logpmf(k, mean))


def neg_binomial_logpmf(n, beta, sigma):
    """Log of ``sigma**n (1+sigma)**(-n-beta) binom(n+beta-1, n)``."""
    n_arr = _check_nonneg_int(n, "n").astype(float)
    if beta <= 0 or sigma <= 0:
        raise DomainError(f"beta and sigma must be positive, got {beta}, {sigma}")
    out = (
        special.gammaln(n_arr + beta)
        - special.gammaln(beta)
        - special.gammaln(n_arr + 1)
        + n_arr * math.log(sigma)
        - (n_arr + beta) * math.log1p(sigma)
    )
    return float(out) if np.ndim(out) == 0 else out


def neg_binomial_pmf(n, beta, sigma):
    return np.exp(neg_binomial_logpmf(n, beta, sigma))


def gamma_logpdf(x, shape, scale=1.0):
    """Log density of Gamma(shape, scale) at ``x`` (``-inf`` for ``x <= 0``
    unless ``shape == 1``)."""
    x = np.asarray(x, dtype=float)
    shape = np.asarray(shape, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            special.xlogy(shape - 1, x)
            - x / scale
            - special.gammaln(shape)
            - shape * math.log(scale)
        )
    out = np.where(x < 0, -np.inf, out)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, exact, for ``n <= 30``."""
    if n < 0 or k < 0:
        raise DomainError("stirling2 arguments must be non-negative")
    if n > STIRLING_MAX_N:
        raise DomainError(f"stirling2 is limited to n <= {STIRLING_MAX_N}, got {n}")
    if k > n:
        return 0
    if n == k:
        return 1
    if k == 0:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def touchard(n: int, z):
    """Touchard polynomial ``T_n(z) = sum_k S(n, k) z**k`` (the n-th Poisson moment)."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    for k in range(n, -1, -1):
        out = out * z + stirling2(n, k)
    return float(out) if out.ndim == 0 else out


def gamma_moment_poly(k: int, z, beta: float):
    """Rising factorial ``(z+beta)(z+beta+1)...(z+beta+k-1)``.

    This is the k-th moment of Gamma(z+beta, 1), a monic degree-k polynomial in z.
    """
    if k < 0 or k > STIRLING_MAX_N:
        raise DomainError(f"gamma_moment_poly requires 0 <= k <= {STIRLING_MAX_N}")
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    for i in range(k):
        out = out * (z + beta + i)
    return float(out) if out.ndim == 0 else out


def logdet_from_log_entries(log_entries, signs=None) -> LogWeight:
    """Determinant of ``signs * exp(log_entries)`` without overflow.

    Row maxima are factored out before the LU factorisation, so entries
    spanning hundreds of orders of magnitude are fine.
    """
    log_entries = np.asarray(log_entries, dtype=float)
    if log_entries.ndim != 2 or log_entries.shape[0] != log_entries.shape[1]:
        raise ValueError("square matrix expected")
    row_max = np.max(log_entries, axis=1)
    if np.any(row_max == -np.inf):
        return LogWeight.zero()
    scaled = np.exp(log_entries - row_max[:, None])
    if signs is not None:
        scaled = scaled * signs
    sign, logabs = np.linalg.slogdet(scaled)
    if sign == 0 or not np.isfinite(logabs):
        return LogWeight.zero()
    return LogWeight(float(logabs + row_max.sum()), int(sign))


def batched_logdet(log_entries) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`logdet_from_log_entries` over a stack ``(..., N, N)``.

    Returns ``(sign, log_abs)`` arrays; zero determinants get sign 0.
    """
    log_entries = np.asarray(log_entries, dtype=float)
    col_max = np.max(log_entries, axis=-2, keepdims=True)
    finite = np.isfinite(col_max)
    safe_max = np.where(finite, col_max, 0.0)
    scaled = np.exp(log_entries - safe_max)
    sign, logabs = np.linalg.slogdet(scaled)
    logabs = logabs + safe_max[..., 0, :].sum(axis=-1)
    dead = ~np.all(finite[..., 0, :], axis=-1)
    sign = np.where(dead | ~np.isfinite(logabs), 0.0, sign)
    logabs = np.where(sign == 0, -np.inf, logabs)
    return sign, logabs

"""Chamber points, partitions, Vandermonde determinants and Schur polynomials.

Text form of every point type is a comma-separated list of coordinates,
e.g. ``"0.5,2"`` for a continuous chamber point or ``"3,1"`` for a partition.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scalar_math import DomainError, LogWeight

# relative gap below which the alternant ratio is abandoned
SCHUR_GAP_THRESHOLD = 1e-4


def _parse(text: str, cast):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty coordinate list: {text!r}")
    return tuple(cast(p) for p in parts)


def _fmt(coords) -> str:
    return ",".join(repr(c) if isinstance(c, float) else str(c) for c in coords)


@dataclass(frozen=True)
class ChamberPointC:
    """Ordered point ``0 <= x_1 <= ... <= x_N`` of the continuous chamber."""

    coords: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        object.__setattr__(self, "coords", c)
        if not c:
            raise DomainError("a chamber point needs at least one coordinate")
        if c[0] < 0 or any(b < a for a, b in zip(c, c[1:])):
            raise DomainError(f"not in the continuous chamber: {c}")

    @classmethod
    def from_text(cls, text: str) -> ChamberPointC:
        return cls(_parse(text, float))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def is_interior(self) -> bool:
        return all(b > a for a, b in zip(self.coords, self.coords[1:]))

    def __array__(self, dtype=None, copy=None):
        return np.array(self.coords, dtype=dtype or float)

    def __str__(self) -> str:
        return _fmt(self.coords)


@dataclass(frozen=True)
class ChamberPointD:
    """Strictly increasing non-negative integer point of the discrete chamber."""

    coords: tuple

    def __post_init__(self):
        c = tuple(int(v) for v in self.coords)
        if any(int(v) != v for v in self.coords):
            raise DomainError(f"discrete coordinates must be integers: {self.coords}")
        object.__setattr__(self, "coords", c)
        if not c:
            raise DomainError("a chamber point needs at least one coordinate")
        if c[0] < 0 or any(b <= a for a, b in zip(c, c[1:])):
            raise DomainError(f"not in the discrete chamber: {c}")

    @classmethod
    def from_text(cls, text: str) -> ChamberPointD:
        return cls(_parse(text, int))

    @property
    def n(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.coords, dtype=dtype or np.int64)

    def __str__(self) -> str:
        return _fmt(self.coords)


@dataclass(frozen=True)
class PartitionN:
    """Partition with at most N rows, stored with trailing zeros to length N."""

    parts: tuple

    def __post_init__(self):
        p = tuple(int(v) for v in self.parts)
        object.__setattr__(self, "parts", p)
        if not p:
            raise DomainError("a partition needs N >= 1 entries")
        if p[-1] < 0 or any(b > a for a, b in zip(p, p[1:])):
            raise DomainError(f"not a partition: {p}")

    @classmethod
    def from_text(cls, text: str) -> PartitionN:
        return cls(_parse(text, int))

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    def __str__(self) -> str:
        return _fmt(self.parts)


def coords(x) -> np.ndarray:
    """Coordinates of a point type or plain sequence as a 1-D array."""
    if isinstance(x, (ChamberPointC, ChamberPointD)):
        return np.asarray(x)
    if isinstance(x, PartitionN):
        return np.array(x.parts)
    return np.atleast_1d(np.asarray(x))


def partition_to_chamber(lam) -> ChamberPointD:
    """``y_i = lambda_{N-i+1} + i - 1``."""
    if not isinstance(lam, PartitionN):
        lam = PartitionN(tuple(lam))
    n = lam.n
    return ChamberPointD(tuple(lam.parts[n - 1 - i] + i for i in range(n)))


def chamber_to_partition(y) -> PartitionN:
    if not isinstance(y, ChamberPointD):
        y = ChamberPointD(tuple(y))
    n = y.n
    return PartitionN(tuple(y.coords[n - 1 - i] - (n - 1 - i) for i in range(n)))


def log_vandermonde(x) -> LogWeight:
    """``prod_{i<j} (x_j - x_i)`` as a :class:`LogWeight`."""
    x = coords(x).astype(float)
    log_value, sign = 0.0, 1
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            d = x[j] - x[i]
            if d == 0:
                return LogWeight.zero()
            if d < 0:
                sign = -sign
            log_value += math.log(abs(d))
    return LogWeight(log_value, sign)


def vandermonde(x) -> float:
    return log_vandermonde(x).value


def log_vandermonde_batch(xs) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``(sign, log|Delta|)`` for an ``(K, N)`` array."""
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[-1]
    logabs = np.zeros(xs.shape[:-1])
    sign = np.ones(xs.shape[:-1])
    for i, j in itertools.combinations(range(n), 2):
        d = xs[..., j] - xs[..., i]
        sign = sign * np.sign(d)
        with np.errstate(divide="ignore"):
            logabs = logabs + np.log(np.abs(d))
    logabs = np.where(sign == 0, -np.inf, logabs)
    return sign, logabs


def min_gap(x) -> float:
    x = coords(x).astype(float)
    if len(x) < 2:
        return math.inf
    return float(np.min(np.diff(np.sort(x))))


@lru_cache(maxsize=128)
def _chamber_cache(n: int, m: int) -> np.ndarray:
    arr = np.array(list(itertools.combinations(range(m), n)), dtype=np.int64).reshape(-1, n)
    arr.setflags(write=False)
    return arr


def discrete_chamber(n: int, m: int) -> np.ndarray:
    """All points of the discrete chamber with coordinates in ``[0, m)``, shape ``(K, n)``."""
    if n < 1 or m < 0:
        raise DomainError("need n >= 1 and m >= 0")
    return _chamber_cache(int(n), int(m))


# ---------------------------------------------------------------------------
# Schur polynomials


def _lambda_of(y) -> tuple:
    y = [int(v) for v in coords(y)]
    n = len(y)
    return tuple(y[n - 1 - i] - (n - 1 - i) for i in range(n))


def _complete_homogeneous(x, m_max) -> np.ndarray:
    """``H[k, m] = h_m(x_1, ..., x_{k+1})`` for ``m <= m_max`` (all terms non-negative)."""
    n = len(x)
    H = np.zeros((n, m_max + 1))
    H[0] = x[0] ** np.arange(m_max + 1)
    for k in range(1, n):
        row = H[k - 1].copy()
        for m in range(1, m_max + 1):
            row[m] += x[k] * row[m - 1]
        H[k] = row
    return H


def schur_alternant(y, x) -> float:
    """``det(x_i^{y_j}) / det(x_i^{j-1})`` with the Vandermonde factor divided out exactly.

    Taking Newton divided differences down the rows of ``(x_i^{y_j})``
    turns row ``k`` into ``h_{y_j - k}(x_1, ..., x_{k+1})`` and extracts
    ``Delta(x)``, so the ratio equals ``det[h_{y_j - k}(x_1..x_{k+1})]``.
    Coordinates are scaled by their maximum first so that every ``h`` stays
    of moderate size; the scale is restored in the log domain.
    """
    x = np.sort(coords(x).astype(float))
    y = coords(y).astype(np.int64)
    n = len(x)
    if n == 1:
        return float(x[0] ** y[0])
    scale = float(x.max())
    if scale == 0.0:
        return 1.0 if np.array_equal(y, np.arange(n)) else 0.0
    H = _complete_homogeneous(x / scale, int(y.max()))
    k = np.arange(n)[:, None]
    deg = y[None, :] - k
    D = np.where(deg >= 0, H[np.arange(n)[:, None], np.clip(deg, 0, None)], 0.0)
    # the matrix is strongly graded; equilibrate rows and columns before LU
    row = np.max(D, axis=1, keepdims=True)
    if np.any(row == 0):
        return 0.0
    D = D / row
    col = np.max(D, axis=0, keepdims=True)
    if np.any(col == 0):
        return 0.0
    sign, logdet = np.linalg.slogdet(D / col)
    if sign == 0:
        return 0.0
    log_total = logdet + np.log(row).sum() + np.log(col).sum()
    return float(sign * math.exp(log_total + math.log(scale) * (int(y.sum()) - n * (n - 1) // 2)))


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class SchurEvaluator:
    """Schur polynomials ``s_lambda(x)`` at a fixed ``x`` by the branching rule.

    ``s_lambda(x_1..x_n) = sum_mu s_mu(x_1..x_{n-1}) x_n^{|lambda| - |mu|}``
    over ``mu`` interlacing ``lambda``.  Every term is a product of
    non-negative numbers, so the sum is exact up to rounding even at
    coincident coordinates.  Intermediate results are memoised across calls.
    """

    def __init__(self, x):
        self.x = coords(x).astype(float)
        self._memo: dict = {}

    def __call__(self, lam) -> float:
        lam = tuple(int(v) for v in lam)
        if len(lam) != len(self.x):
            raise ValueError("partition length must equal the number of variables")
        return self._s(lam, len(self.x))

    def _s(self, lam, n):
        key = (lam, n)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if n == 1:
            val = self.x[0] ** lam[0]
        else:
            val = 0.0
            xn = self.x[n - 1]
            total = sum(lam)
            ranges = [range(lam[i + 1], lam[i] + 1) for i in range(n - 1)]
            for mu in itertools.product(*ranges):
                deg = total - sum(mu)
                w = xn**deg if deg else 1.0
                if w == 0.0:
                    continue
                val += self._s(mu, n - 1) * w
        self._memo[key] = val
        return val


def schur_equal(lam, a: float) -> float:
    """``s_lambda(a, ..., a)`` by the Weyl dimension formula."""
    lam = list(lam)
    n = len(lam)
    dim = 1.0
    for i in range(n):
        for j in range(i + 1, n):
            dim *= (lam[i] - lam[j] + j - i) / (j - i)
    return dim * a ** sum(lam)


def schur_combinatorial(y, x) -> float:
    """Schur polynomial by the monomial (Gelfand-Tsetlin) expansion; valid at coincident ``x``."""
    return SchurEvaluator(np.sort(coords(x).astype(float)))(_lambda_of(y))


def use_combinatorial_branch(x) -> bool:
    x = coords(x).astype(float)
    if len(x) < 2:
        return False
    return min_gap(x) < SCHUR_GAP_THRESHOLD * max(1.0, float(np.max(x)))


def schur_eval(y, x, method: str = "auto") -> float:
    """``s_y(x) = det(x_i^{y_j}) / det(x_i^{j-1})``, continuous at coincident ``x``.

    ``method`` is ``"auto"``, ``"alternant"`` or ``"combinatorial"``.
    """
    if method == "auto":
        method = "combinatorial" if use_combinatorial_branch(x) else "alternant"
    if method == "alternant":
        return schur_alternant(y, x)
    if method == "combinatorial":
        return schur_combinatorial(y, x)
    raise ValueError(f"unknown method {method!r}")

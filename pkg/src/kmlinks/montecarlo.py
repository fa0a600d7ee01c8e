"""Stochastic cross-checks: Euler-Maruyama for the non-colliding diffusions and
exact skeleton sampling of the conditioned birth-death chains.

Random streams are derived from ``SimConfig.seed`` with
``numpy.random.SeedSequence(seed).spawn(n_blocks)``; block ``b`` simulates
paths ``[b * block_size, (b + 1) * block_size)``.  Output is therefore a
deterministic function of the configuration.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernels1d import FREE, STATIONARY
from .km_nd import bd_nd_table
from .scalar_math import DomainError
from .weyl import coords

MAX_REDRAWS = 100
MAX_SUBDIVISIONS = 12
CHAIN_MAX_N = 3


class OrderingViolationError(RuntimeError):
    """Ordering violations stayed above the limit after all step halvings."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``violation_limit`` is the admissible fraction of path-steps whose first
    proposal leaves the chamber; above it the step is halved, at most
    ``max_halvings`` times.
    """

    n: int
    beta: float
    t_end: float
    dt: float
    n_paths: int
    seed: int = 0
    sigma: float | None = None
    max_halvings: int = 3
    violation_limit: float = 1e-3
    block_size: int = 20_000

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("need N >= 1")
        if not self.beta > 0:
            raise DomainError("need beta > 0")
        if not self.dt > 0:
            raise DomainError("need dt > 0")
        if self.n_paths < 1:
            raise DomainError("need n_paths >= 1")
        if not self.t_end >= 0:
            raise DomainError("need t_end >= 0")
        if self.sigma is not None and not self.sigma > 0:
            raise DomainError("need sigma > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PathEnsemble:
    """Result of an SDE run.

    ``terminal`` has shape ``(n_paths, N)``; ``snapshots`` (if requested) has
    shape ``(len(times), n_paths, N)``.
    """

    config: SimConfig
    terminal: np.ndarray
    dt_used: float
    n_steps: int
    halvings: int
    violation_rate: float
    redraws: int
    stuck_steps: int
    subdivided_steps: int = 0
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots: np.ndarray | None = None

    def diagnostics(self) -> dict:
        return dict(dt_used=self.dt_used, n_steps=self.n_steps, halvings=self.halvings,
                    violation_rate=self.violation_rate, redraws=self.redraws, stuck_steps=self.stuck_steps,
                    subdivided_steps=self.subdivided_steps)


def _drift(x, beta, stationary):
    drift = beta - x if stationary else np.full_like(x, beta)
    n = x.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            gap = x[:, i] - x[:, j]
            drift[:, i] += 2.0 * x[:, i] / gap
            drift[:, j] -= 2.0 * x[:, j] / gap
    return drift


def _step(x, z, h, beta, stationary):
    prop = x + _drift(x, beta, stationary) * h + np.sqrt(2.0 * h * x) * z
    return np.maximum(prop, 0.0, out=prop)


def _violations(x):
    bad = ~np.all(np.isfinite(x), axis=1)
    if x.shape[1] > 1:
        bad |= np.any(np.diff(x, axis=1) <= 0, axis=1)
    return bad


def _advance(x, h, beta, stationary, rng, depth, counts):
    """One step of size ``h`` for every row of ``x`` with redraws, then local
    subdivision for rows whose proposals keep breaking the ordering.

    Returns the new state and the mask of first-proposal violations.
    """
    prop = _step(x, rng.standard_normal(x.shape), h, beta, stationary)
    bad = _violations(prop)
    first = bad.copy()
    tries = 0
    while bad.any() and tries < MAX_REDRAWS:
        idx = np.flatnonzero(bad)
        prop[idx] = _step(x[idx], rng.standard_normal((len(idx), x.shape[1])), h, beta, stationary)
        counts["redraws"] += len(idx)
        bad[idx] = _violations(prop[idx])
        tries += 1
    if bad.any() and depth < MAX_SUBDIVISIONS:
        # a stiff repulsion overshoots for every noise draw; split the step
        idx = np.flatnonzero(bad)
        counts["subdivided"] += len(idx)
        sub = x[idx]
        for _ in range(2):
            sub, _ = _advance(sub, h / 2.0, beta, stationary, rng, depth + 1, counts)
        prop[idx] = sub
        bad[idx] = _violations(sub)
    if bad.any():
        counts["stuck"] += int(bad.sum())
        prop[bad] = x[bad]
    return prop, first


def _run_block(x0, n_paths, n_steps, h, beta, stationary, rng, snap_every):
    x = np.tile(x0, (n_paths, 1))
    counts = dict(redraws=0, subdivided=0, stuck=0)
    first_viol = 0
    snaps = []
    for k in range(n_steps):
        x, first = _advance(x, h, beta, stationary, rng, 0, counts)
        first_viol += int(first.sum())
        if snap_every and (k + 1) % snap_every == 0:
            snaps.append(x.copy())
    return x, first_viol, counts, snaps


def _simulate(cfg: SimConfig, x0, stationary: bool, n_snapshots: int) -> PathEnsemble:
    x0 = coords(x0).astype(float)
    if len(x0) != cfg.n:
        raise DomainError(f"starting point has {len(x0)} coordinates, expected {cfg.n}")
    if x0.min() < 0 or (cfg.n > 1 and np.any(np.diff(x0) <= 0)):
        raise DomainError("starting point must be an interior chamber point (coincident starts are not simulated)")
    n_blocks = math.ceil(cfg.n_paths / cfg.block_size)
    dt = cfg.dt
    for halvings in range(cfg.max_halvings + 1):
        n_steps = max(1, math.ceil(cfg.t_end / dt - 1e-9)) if cfg.t_end > 0 else 0
        h = cfg.t_end / n_steps if n_steps else 0.0
        snap_every = n_steps // n_snapshots if n_snapshots and n_steps else 0
        children = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
        outs, viol, snaps = [], 0, []
        totals = dict(redraws=0, subdivided=0, stuck=0)
        for b, child in enumerate(children):
            size = min(cfg.block_size, cfg.n_paths - b * cfg.block_size)
            res = _run_block(x0, size, n_steps, h, cfg.beta, stationary, np.random.default_rng(child), snap_every)
            outs.append(res[0])
            viol += res[1]
            for key in totals:
                totals[key] += res[2][key]
            snaps.append(res[3])
        rate = viol / (cfg.n_paths * n_steps) if n_steps else 0.0
        if rate <= cfg.violation_limit:
            times = np.array([h * snap_every * (i + 1) for i in range(len(snaps[0]))]) if snap_every else np.zeros(0)
            snapshots = (np.concatenate([np.stack(s) for s in snaps], axis=1) if snap_every and snaps[0] else None)
            return PathEnsemble(cfg, np.concatenate(outs), h, n_steps, halvings, rate, totals["redraws"],
                                totals["stuck"], totals["subdivided"], times, snapshots)
        dt /= 2.0
    raise OrderingViolationError(
        f"ordering-violation rate {rate:.2e} exceeds {cfg.violation_limit:.1e} after {cfg.max_halvings} halvings"
    )


def sde_simulate_free(cfg: SimConfig, x0, n_snapshots: int = 0) -> PathEnsemble:
    """Euler-Maruyama for ``dx_i = sqrt(2 x_i) dw_i + (beta + sum_j 2 x_i / (x_i - x_j)) dt``.

    Proposals are clipped at zero; a proposal that breaks strict ordering is
    redrawn with fresh noise for that path, and if ``MAX_REDRAWS`` redraws
    all fail the step of that path is split in two halves (recursively, up to
    ``MAX_SUBDIVISIONS`` levels).  If more than
    ``cfg.violation_limit`` of first proposals break ordering, the whole run
    is repeated with half the step.
    """
    return _simulate(cfg, x0, False, n_snapshots)


def sde_simulate_stationary(cfg: SimConfig, x0, n_snapshots: int = 0) -> PathEnsemble:
    """As :func:`sde_simulate_free` with the extra confining drift ``-x_i``."""
    return _simulate(cfg, x0, True, n_snapshots)


def chain_simulate_conditioned(cfg: SimConfig, x0, step: float, kind: str = FREE) -> np.ndarray:
    """Exact skeleton of the non-intersecting birth-death chain.

    At each skeleton time the next state is drawn from the enumerated
    transition table of the conditioned chain over time ``step``.  Returns
    an integer array of shape ``(n_skeleton + 1, n_paths, N)`` with
    ``n_skeleton = round(cfg.t_end / step)``.
    """
    if cfg.n > CHAIN_MAX_N:
        raise DomainError(f"conditioned-chain sampling is limited to N <= {CHAIN_MAX_N}")
    if not step > 0:
        raise DomainError("need step > 0")
    if kind not in (FREE, STATIONARY):
        raise ValueError(f"unknown chain kind {kind!r}")
    sigma = cfg.sigma if cfg.sigma is not None else 1.0
    x0 = coords(x0).astype(np.int64)
    if len(x0) != cfg.n or x0.min() < 0 or (cfg.n > 1 and np.any(np.diff(x0) <= 0)):
        raise DomainError("starting point must be a strictly increasing vector of N non-negative integers")
    n_skel = int(round(cfg.t_end / step))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    path = np.empty((n_skel + 1, cfg.n_paths, cfg.n), dtype=np.int64)
    path[0] = x0
    tables: dict = {}
    for k in range(n_skel):
        cur = path[k]
        states, inverse = np.unique(cur, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        nxt = np.empty_like(cur)
        for s_idx, state in enumerate(states):
            key = tuple(int(v) for v in state)
            if key not in tables:
                ys, probs = bd_nd_table(kind, cfg.beta, step, state, sigma=sigma)
                cdf = np.cumsum(np.clip(probs, 0.0, None))
                tables[key] = (ys, cdf / cdf[-1])
            ys, cdf = tables[key]
            members = np.flatnonzero(inverse == s_idx)
            draws = np.searchsorted(cdf, rng.random(len(members)), side="right")
            nxt[members] = ys[np.minimum(draws, len(ys) - 1)]
        path[k + 1] = nxt
    return path

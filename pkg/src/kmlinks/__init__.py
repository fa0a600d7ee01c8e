"""Intertwinings between non-colliding squared-Bessel type diffusions and
conditioned birth-death chains.

The package evaluates the one-dimensional transition kernels, their
Karlin-McGregor determinants, the Poisson and Gamma links between the
continuous and discrete chambers, the Laguerre and Meixner ensembles, and
certifies the intertwining relations between them numerically.
"""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("kmlinks")
except PackageNotFoundError:  # pragma: no cover - source checkout without install
    __version__ = "0.1.0"

from .ensembles import (
    EnsembleParams,
    laguerre_density,
    laguerre_logdensity,
    laguerre_sample,
    meixner_logpmf,
    meixner_pmf,
    meixner_sample,
)
from .kernels1d import (
    ChainParams,
    DiffusionParams,
    KernelEval,
    bd_free_kernel,
    bd_stat_kernel,
    k_density,
    k_sample,
    q_density,
    q_sample,
)
from .km_nd import bd_nd_free, bd_nd_stat, k_nd, k_nd_batch, q_nd, q_nd_batch
from .links import lambda_n, lambda_n_sigma, lambda_sample, lambda_star
from .montecarlo import SimConfig, chain_simulate_conditioned, sde_simulate_free, sde_simulate_stationary
from .scalar_math import DomainError, EnumerationBudgetError, LogWeight
from .weyl import ChamberPointC, ChamberPointD, PartitionN, log_vandermonde, schur_eval

__all__ = [
    "sde_simulate_stationary",
    "sde_simulate_free",
    "chain_simulate_conditioned",
    "SimConfig",
    "q_nd_batch",
    "k_nd_batch",
    "ChainParams",
    "ChamberPointC",
    "ChamberPointD",
    "DiffusionParams",
    "DomainError",
    "EnsembleParams",
    "EnumerationBudgetError",
    "KernelEval",
    "LogWeight",
    "PartitionN",
    "bd_free_kernel",
    "bd_nd_free",
    "bd_nd_stat",
    "bd_stat_kernel",
    "k_density",
    "k_nd",
    "k_sample",
    "laguerre_density",
    "laguerre_logdensity",
    "laguerre_sample",
    "lambda_n",
    "lambda_n_sigma",
    "lambda_sample",
    "lambda_star",
    "log_vandermonde",
    "meixner_logpmf",
    "meixner_pmf",
    "meixner_sample",
    "q_density",
    "q_nd",
    "q_sample",
    "schur_eval",
]

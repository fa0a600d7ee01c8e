import math

import numpy as np
import pytest

from kmlinks.ensembles import EnsembleParams, meixner_pmf
from kmlinks.kernels1d import FREE, STATIONARY, ChainParams, DiffusionParams, bd_free_kernel, bd_stat_kernel, k_density, q_density
from kmlinks.km_nd import bd_nd_free, bd_nd_stat, bd_nd_table, k_nd, k_nd_batch, q_nd, q_nd_batch
from kmlinks.quadrature import chamber_quad2
from kmlinks.scalar_math import DomainError


class TestReductionToOneDimension:
    @pytest.mark.parametrize("beta,t,x,y", [(0.5, 0.3, 0.7, 1.1), (2.5, 1.5, 3.0, 0.2)])
    def test_continuous(self, beta, t, x, y):
        assert q_nd(beta, t, [x], [y]).value == pytest.approx(float(q_density(DiffusionParams(beta, t), x, y)), rel=1e-14)
        assert k_nd(beta, t, [x], [y]).value == pytest.approx(float(k_density(DiffusionParams(beta, t), x, y)), rel=1e-14)

    def test_discrete(self):
        assert bd_nd_free(1.5, 0.4, [3], [5]).value == pytest.approx(
            bd_free_kernel(ChainParams(1.5, 0.4), 3, 5).value, abs=1e-14)
        assert bd_nd_stat(1.5, 0.7, 0.4, [3], [5]).value == pytest.approx(
            bd_stat_kernel(ChainParams(1.5, 0.4, sigma=0.7), 3, 5).value, abs=1e-14)


class TestContinuousKernels:
    @pytest.mark.parametrize("beta,t", [(1.0, 0.5), (2.5, 1.0), (0.5, 2.0)])
    def test_q_nd_integrates_to_one(self, beta, t):
        x = np.array([0.5, 2.0])
        total = chamber_quad2(lambda a, b: q_nd_batch(beta, t, x, np.stack([a, b], -1)),
                              exponent=beta - 1.0, rate=1.0 / t, n_outer=120, n_inner=80)
        assert abs(total - 1.0) <= 1e-7

    @pytest.mark.parametrize("beta,t", [(1.0, 0.5), (2.5, 1.0), (0.5, 2.0)])
    def test_k_nd_integrates_to_one(self, beta, t):
        x = np.array([0.5, 2.0])
        total = chamber_quad2(lambda a, b: k_nd_batch(beta, t, x, np.stack([a, b], -1)),
                              exponent=beta - 1.0, rate=1.0 / (-math.expm1(-t)), n_outer=120, n_inner=80)
        assert abs(total - 1.0) <= 1e-7

    def test_coincident_target_gives_zero(self):
        assert q_nd(1.0, 1.0, [0.5, 2.0], [1.0, 1.0]).value == 0.0
        assert k_nd(1.0, 1.0, [0.5, 2.0], [1.0, 1.0]).value == 0.0

    def test_coincident_start_rejected(self):
        with pytest.raises(DomainError):
            q_nd(1.0, 1.0, [1.0, 1.0], [0.5, 2.0])

    def test_batch_matches_scalar(self, rng):
        x = np.array([0.3, 1.1, 2.9])
        ys = np.sort(rng.uniform(0, 5, size=(10, 3)), axis=1)
        batch = q_nd_batch(1.7, 0.8, x, ys)
        for y, b in zip(ys, batch):
            assert q_nd(1.7, 0.8, x, y).value == pytest.approx(b, rel=1e-12)

    def test_semigroup(self):
        beta, s, t = 1.5, 0.4, 0.6
        x, y = np.array([0.5, 2.0]), np.array([1.0, 2.5])
        comp = chamber_quad2(
            lambda a, b: q_nd_batch(beta, s, x, np.stack([a, b], -1))
            * np.array([[q_nd(beta, t, z, y).value if z[1] > z[0] else 0.0 for z in row]
                        for row in np.stack([a, b], -1)]),
            exponent=beta - 1.0, rate=1.0 / s + 1.0 / t, n_outer=100, n_inner=70,
        )
        direct = q_nd(beta, s + t, x, y).value
        assert abs(comp - direct) <= 1e-6 * direct

    def test_positivity(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 4))
            x = np.sort(rng.uniform(0, 5, n))
            y = np.sort(rng.uniform(0, 5, n))
            for fn in (q_nd, k_nd):
                r = fn(float(rng.uniform(0.3, 3)), float(rng.uniform(0.05, 2)), x, y)
                assert r.value >= -r.error_bound


class TestDiscreteKernels:
    def test_time_zero(self):
        assert bd_nd_free(1.0, 0.0, [0, 2], [0, 2]).value == 1.0
        assert bd_nd_free(1.0, 0.0, [0, 2], [0, 3]).value == 0.0

    def test_free_row_sum(self):
        ys, probs = bd_nd_table(FREE, 1.0, 0.5, [0, 1])
        assert abs(probs.sum() - 1.0) <= 1e-11

    def test_stationary_row_sum(self):
        ys, probs = bd_nd_table(STATIONARY, 2.0, 0.3, [1, 4], sigma=1.0)
        assert abs(probs.sum() - 1.0) <= 1e-11

    def test_table_matches_pointwise(self):
        ys, probs = bd_nd_table(FREE, 1.5, 0.7, [0, 2, 3])
        for y, p in list(zip(ys, probs))[:: max(1, len(ys) // 25)]:
            assert bd_nd_free(1.5, 0.7, [0, 2, 3], y).value == pytest.approx(p, abs=1e-13)

    def test_semigroup(self):
        beta, s, t, x = 1.0, 0.3, 0.5, [0, 2]
        ys, p1 = bd_nd_table(FREE, beta, s, x)
        target = [1, 3]
        comp = sum(p * bd_nd_free(beta, t, z, target).value for z, p in zip(ys, p1) if p > 1e-16)
        direct = bd_nd_free(beta, s + t, x, target).value
        assert abs(comp - direct) <= 1e-6 * direct

    @pytest.mark.parametrize("beta,sigma,t", [(1.0, 1.0, 0.4), (2.5, 0.5, 1.0)])
    def test_detailed_balance(self, beta, sigma, t):
        p = EnsembleParams(2, beta, sigma)
        pts = [(0, 1), (0, 3), (1, 2), (2, 5), (4, 6)]
        for x in pts:
            for y in pts:
                lhs = float(meixner_pmf(p, np.array(x))) * bd_nd_stat(beta, sigma, t, x, y).value
                rhs = float(meixner_pmf(p, np.array(y))) * bd_nd_stat(beta, sigma, t, y, x).value
                assert abs(lhs - rhs) <= 1e-9

    def test_non_strict_rejected(self):
        with pytest.raises(DomainError):
            bd_nd_free(1.0, 0.5, [1, 1], [0, 2])

    def test_positivity(self, rng):
        for _ in range(30):
            x = np.sort(rng.choice(12, 3, replace=False))
            y = np.sort(rng.choice(12, 3, replace=False))
            r = bd_nd_free(1.3, 0.6, x, y)
            assert r.value >= -r.error_bound

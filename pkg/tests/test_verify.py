import json
import math

import numpy as np
import pytest
from scipy import stats

from kmlinks.kernels1d import FREE, bd_rows
from kmlinks.km_nd import bd_nd_free
from kmlinks.scalar_math import poisson_logpmf, touchard
from kmlinks.verify import (
    CheckReport,
    andreif_compose,
    boundary_limit,
    check_boundary,
    check_factorization_q1,
    check_intertwining_free,
    check_intertwining_stationary,
    check_intertwining_star,
    check_invariance,
    check_lambda_normalization,
    check_pushforward,
    check_pushforward_routes,
    check_star_normalization,
    merge_reports,
    render_table,
    reports_to_json,
    run_suite,
)
from kmlinks.weyl import vandermonde


class TestCheckReport:
    def test_pass_rule_uses_tolerance(self):
        r = CheckReport.single("x", {}, 1.0, 1.0 + 1e-8, 0.0, 1e-7)
        assert r.passed and r.max_abs_residual == pytest.approx(1e-8)

    def test_fail(self):
        assert not CheckReport.single("x", {}, 1.0, 1.1, 0.0, 1e-7).passed

    def test_bound_widens_acceptance(self):
        assert CheckReport.single("x", {}, 1.0, 1.0 + 1e-6, 1e-7, 1e-9).passed

    def test_relative(self):
        r = CheckReport.single("x", {}, 2e-10, 1e-10, 0.0, 1e-6, relative=True)
        assert r.residual == pytest.approx(1.0) and not r.passed

    def test_merge(self):
        a = CheckReport.single("x", {"i": 0}, 1.0, 1.0, 0.0, 1e-7)
        b = CheckReport.single("x", {"i": 1}, 1.0, 2.0, 0.0, 1e-7)
        m = merge_reports("x", [a, b])
        assert len(m.grid) == 2 and not m.passed and m.max_abs_residual == 1.0
        with pytest.raises(ValueError):
            merge_reports("x", [])


class TestAndreif:
    def test_single_integral(self):
        comp = andreif_compose(lambda z: np.array([math.exp(-z)]), lambda z: np.array([z]), "continuous")
        assert comp.matrix[0, 0] == pytest.approx(1.0, rel=1e-12)

    def test_touchard_determinant(self):
        x = np.array([0.4, 1.3, 2.2])
        powers = np.arange(3)
        comp = andreif_compose(lambda w: np.exp(poisson_logpmf(w[None, :], x[:, None])),
                               lambda w: w[None, :].astype(float) ** powers[:, None], "discrete", upper=80)
        expected = np.array([[touchard(j, xi) for j in range(3)] for xi in x])
        np.testing.assert_allclose(comp.matrix, expected, rtol=1e-12)
        assert np.linalg.det(comp.matrix) == pytest.approx(vandermonde(x), rel=1e-10)

    def test_chapman_kolmogorov_rows(self):
        beta, s, t = 1.5, 0.3, 0.5
        x, y = np.array([0, 2]), np.array([1, 3])
        rows_s, bs = bd_rows(FREE, beta, s, x, truncation=200)
        rows_t, bt = bd_rows(FREE, beta, t, np.arange(200), truncation=200)
        comp = andreif_compose(lambda w: rows_s[:, w], lambda w: rows_t[w][:, y].T, "discrete", upper=100)
        direct = bd_nd_free(beta, s + t, x, y).value
        composed = vandermonde(y) / vandermonde(x) * np.linalg.det(comp.matrix)
        assert abs(composed - direct) <= 1e-10

    def test_unknown_domain(self):
        with pytest.raises(ValueError):
            andreif_compose(lambda z: z, lambda z: z, "other")

    def test_discrete_needs_upper(self):
        with pytest.raises(ValueError):
            andreif_compose(lambda z: z, lambda z: z, "discrete")


class TestIntertwining:
    def test_free_examples(self):
        assert check_intertwining_free(1.0, 0.5, [1.0], [0]).max_abs_residual <= 1e-9
        r = check_intertwining_free(2.5, 1.0, [0.5, 2.0], [1, 3])
        assert r.passed and r.max_abs_residual <= 1e-7

    def test_star_examples(self):
        assert check_intertwining_star(1.0, 0.5, [0], [1.0]).max_abs_residual <= 1e-9
        r = check_intertwining_star(1.5, 0.7, [0, 2], [1.0, 3.0])
        assert r.passed and r.max_abs_residual <= 1e-7

    def test_star_coincident_x(self):
        r = check_intertwining_star(1.0, 0.5, [0, 2], [1.0, 1.0])
        assert r.grid[0]["lhs"] == 0.0 and r.grid[0]["rhs"] == 0.0

    def test_stationary_examples(self):
        assert check_intertwining_stationary(1.0, 1.0, 0.5, [1.0], [0]).max_abs_residual <= 1e-9
        r = check_intertwining_stationary(2.0, 0.5, 1.0, [0.5, 2.0], [0, 3])
        assert r.passed and r.max_abs_residual <= 1e-7

    def test_time_zero(self):
        from kmlinks.links import lambda_n
        r = check_intertwining_free(1.0, 0.0, [0.5, 2.0], [1, 3])
        assert r.grid[0]["lhs"] == pytest.approx(lambda_n([0.5, 2.0], [1, 3]))
        r = check_intertwining_stationary(1.0, 0.5, 0.0, [0.5, 2.0], [1, 3])
        assert r.grid[0]["lhs"] == pytest.approx(lambda_n([0.25, 1.0], [1, 3]))

    def test_three_particles(self):
        assert check_intertwining_free(1.0, 0.5, [0.5, 1.5, 3.0], [0, 2, 4]).max_abs_residual <= 1e-6


class TestFactorization:
    def test_one_particle(self):
        assert check_factorization_q1(1.3, [0.8], [1.7]).max_abs_residual <= 1e-10

    def test_continuous_two(self):
        r = check_factorization_q1(1.0, [1.0, 2.0], [0.5, 3.0])
        assert r.passed and r.max_abs_residual <= 1e-7

    def test_discrete_two(self):
        r = check_factorization_q1(1.0, [0, 1], [0, 2], side="discrete")
        assert r.passed and r.max_abs_residual <= 1e-8

    def test_unknown_side(self):
        with pytest.raises(ValueError):
            check_factorization_q1(1.0, [1.0], [1.0], side="sideways")


class TestInvariance:
    def test_laguerre_one(self):
        assert check_invariance("laguerre", 1.5, 0.5, [1.2]).max_abs_residual <= 1e-9

    def test_meixner_two(self):
        r = check_invariance("meixner", 1.0, 0.4, [0, 2], sigma=1.0)
        assert r.passed and r.max_abs_residual <= 1e-8

    def test_laguerre_three(self):
        assert check_invariance("laguerre", 2.5, 1.0, [0.5, 1.5, 3.5]).max_abs_residual <= 1e-6

    def test_unknown(self):
        with pytest.raises(ValueError):
            check_invariance("wigner", 1.0, 1.0, [1.0])


class TestPushforward:
    def test_one_particle_is_negative_binomial_mixture(self):
        r = check_pushforward(1.7, 0.6, [3])
        assert r.max_abs_residual <= 1e-10
        assert r.grid[0]["rhs"] == pytest.approx(stats.nbinom.pmf(3, 1.7, 1 / 1.6), rel=1e-12)

    def test_two_particles(self):
        r = check_pushforward(1.0, 1.0, [0, 1])
        assert r.passed and r.max_rel_residual <= 1e-6

    def test_direct_route(self):
        assert check_pushforward(1.0, 1.0, [0, 1], route="direct").max_rel_residual <= 1e-6

    def test_routes_agree(self):
        assert check_pushforward_routes(2.5, 0.5, [1, 3]).max_rel_residual <= 1e-6


class TestNormalization:
    @pytest.mark.parametrize("x", [(0.5, 2.0), (1.0, 1.0), (0.0, 0.0, 0.0)])
    def test_lambda(self, x):
        assert check_lambda_normalization(x).max_abs_residual <= 1e-10

    @pytest.mark.parametrize("route", ["andreif", "direct"])
    def test_star(self, route):
        assert check_star_normalization(1.5, [0, 2], route=route).max_abs_residual <= 1e-7

    def test_star_three(self):
        assert check_star_normalization(0.5, [0, 2, 4]).max_abs_residual <= 1e-7


class TestBoundary:
    def test_lambda_limit_matches_schur(self):
        res = boundary_limit("lambda", [1.0, 1.0], [0, 2])
        assert res.reference is not None
        assert abs(res.limit - res.reference) <= 1e-8

    def test_q_nd_cauchy(self):
        res = boundary_limit("q_nd", [1.0, 1.0], [0.5, 2.0], beta=1.0, t=1.0)
        assert res.converged and res.cauchy <= 1e-6

    def test_coincident_y_is_zero(self):
        res = boundary_limit("q_nd", [1.0, 1.0], [2.0, 2.0])
        assert all(v == 0.0 for v in res.values)

    def test_sigma_kernel(self):
        res = boundary_limit("lambda_sigma", [1.0, 1.0, 1.0], [0, 2, 4], sigma=0.5)
        assert abs(res.limit - res.reference) <= 1e-8

    def test_gaps_must_decrease(self):
        with pytest.raises(ValueError):
            boundary_limit("lambda", [1.0, 1.0], [0, 1], gaps=[0.1, 0.2])

    def test_check_report(self):
        assert check_boundary("k_nd", [1.0, 1.0], [0.5, 2.0], beta=2.5, t=0.5).passed


class TestSuite:
    def test_single_identity_report(self):
        reports = run_suite("pushforward", n_max=2, betas=(1.0,), sigmas=(1.0,), workers=1)
        assert {r.identity_name for r in reports} >= {"pushforward_andreif[N=1]", "pushforward_andreif[N=2]"}
        assert all(r.passed for r in reports)

    def test_threaded_matches_serial(self):
        kw = dict(n_max=2, betas=(1.0,), times=(0.5,))
        a = run_suite("intertwining_free", workers=1, **kw)
        b = run_suite("intertwining_free", workers=4, **kw)
        assert [r.max_abs_residual for r in a] == [r.max_abs_residual for r in b]

    def test_outputs(self):
        reports = run_suite("normalization", n_max=1, betas=(1.0,), workers=1)
        payload = json.loads(reports_to_json(reports, version="test"))
        assert payload["all_passed"] and payload["version"] == "test"
        assert payload["reports"][0]["grid"]
        table = render_table(reports)
        assert "PASS" in table and "normalization_lambda[N=1]" in table

    def test_unknown_identity(self):
        with pytest.raises(ValueError):
            run_suite("nonsense")

import math

import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st
from scipy import integrate, stats

from copula import core
from copula.core import DependenceParam, RegionTag, UnitPoint
from copula.sampler import SAMPLING_METHODS, make_rng, open_uniforms, rng_info, sample_copula
from core.exceptions import DomainError

THETAS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)

thetas = st.floats(min_value=0.01, max_value=50.0, allow_nan=False)
units = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
open_units = st.floats(min_value=1e-6, max_value=1.0 - 1e-6, allow_nan=False)


class DependenceParamTests(SimpleTestCase):
    def test_threshold(self):
        self.assertEqual(DependenceParam(1.0).threshold, 0.5)
        self.assertAlmostEqual(DependenceParam(3.0).threshold, 0.75)

    def test_rejects_invalid_theta(self):
        for bad in (0.0, -1.0, math.nan, math.inf, 1e9, "abc"):
            with self.assertRaises(DomainError):
                DependenceParam(bad)

    def test_as_theta_passes_instances_through(self):
        th = DependenceParam(2.0)
        self.assertIs(core.as_theta(th), th)
        self.assertEqual(float(core.as_theta(2)), 2.0)


class RegionTests(SimpleTestCase):
    def test_classify_region(self):
        # theta = 1: a = 0.5, support line v = 0.5 (1 - u)
        self.assertEqual(core.classify_region((0.2, 0.3), 1), RegionTag.VOID)
        self.assertEqual(core.classify_region((0.8, 0.3), 1), RegionTag.LOWER)
        self.assertEqual(core.classify_region((0.3, 0.9), 1), RegionTag.UPPER)
        self.assertEqual(core.classify_region(UnitPoint(0.5, 0.5), 1), RegionTag.BOUNDARY_LOWER_UPPER)
        self.assertEqual(core.classify_region((0.5, 0.25), 1), RegionTag.BOUNDARY_SUPPORT)

    def test_classify_rejects_points_outside_square(self):
        with self.assertRaises(DomainError):
            core.classify_region((1.5, 0.2), 1)

    def test_region_codes_vectorised(self):
        codes = core.region_codes([0.2, 0.8, 0.3], [0.3, 0.3, 0.9], 1)
        self.assertEqual(codes.tolist(), [0, 1, 2])


class CdfTests(SimpleTestCase):
    def test_known_values(self):
        self.assertAlmostEqual(core.cdf(0.5, 0.5, 1), 0.125, places=15)
        self.assertEqual(core.cdf(0.2, 0.3, 1), 0.0)
        # Upper: u - (1 - v)(1 - (1 - u)^2)
        self.assertAlmostEqual(core.cdf(0.3, 0.9, 1), 0.3 - 0.1 * (1 - 0.49), places=15)

    def test_boundary_identities(self):
        g = np.linspace(0.0, 1.0, 101)
        for theta in THETAS:
            np.testing.assert_allclose(core.cdf(g, 0.0, theta), 0.0, atol=1e-12)
            np.testing.assert_allclose(core.cdf(0.0, g, theta), 0.0, atol=1e-12)
            np.testing.assert_allclose(core.cdf(g, 1.0, theta), g, atol=1e-12)
            np.testing.assert_allclose(core.cdf(1.0, g, theta), g, atol=1e-12)

    def test_scalar_in_scalar_out(self):
        self.assertIsInstance(core.cdf(0.4, 0.6, 2), float)
        self.assertEqual(core.cdf([0.4, 0.5], 0.6, 2).shape, (2,))

    def test_rejects_points_outside_square(self):
        with self.assertRaises(DomainError):
            core.cdf(-0.1, 0.5, 1)
        with self.assertRaises(DomainError):
            core.pdf(0.5, 1.1, 1)

    def test_continuous_across_lower_upper_split(self):
        for theta in THETAS:
            a = DependenceParam(theta).threshold
            u = np.linspace(0.01, 0.99, 50)
            below = core.cdf(u, a, theta)
            above = core.cdf(u, np.nextafter(a, 1.0), theta)
            np.testing.assert_allclose(below, above, atol=1e-12)

    def test_huge_theta_stays_finite(self):
        u, v = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0, 1, 21))
        with np.errstate(all="raise"):
            values = core.cdf(u, v, 1e6)
        self.assertTrue(np.all(np.isfinite(values)))
        self.assertTrue(np.all(np.isfinite(core.pdf(u, v, 1e6))))

    @given(u=units, v=units, theta=thetas)
    @hsettings(max_examples=200, deadline=None)
    def test_frechet_bounds(self, u, v, theta):
        c = core.cdf(u, v, theta)
        self.assertGreaterEqual(c, max(u + v - 1.0, 0.0))
        self.assertLessEqual(c, min(u, v))

    @given(u=units, v=units, theta=thetas)
    @hsettings(max_examples=200, deadline=None)
    def test_negative_quadrant_dependence(self, u, v, theta):
        self.assertLessEqual(core.cdf(u, v, theta), u * v + 1e-15)

    @given(u=units, v=units, theta=thetas)
    @hsettings(max_examples=100, deadline=None)
    def test_survival_copula_identity(self, u, v, theta):
        expected = u + v - 1.0 + core.cdf(1.0 - u, 1.0 - v, theta)
        self.assertAlmostEqual(core.survival_copula(u, v, theta), min(max(expected, 0.0), min(u, v)), places=14)

    def test_survival_copula_margins(self):
        g = np.linspace(0.0, 1.0, 51)
        np.testing.assert_allclose(core.survival_copula(g, 1.0, 2.0), g, atol=1e-12)
        np.testing.assert_allclose(core.survival_copula(0.0, g, 2.0), 0.0, atol=1e-12)


class DensityTests(SimpleTestCase):
    def test_void_region_has_no_density(self):
        self.assertEqual(core.pdf(0.2, 0.3, 1), 0.0)
        self.assertEqual(core.log_pdf(0.2, 0.3, 1), -math.inf)

    def test_upper_density_is_free_of_v(self):
        theta = 2.0
        np.testing.assert_allclose(core.pdf(0.4, [0.7, 0.8, 0.95], theta), 3.0 * 0.6**2, rtol=1e-14)

    @given(u=open_units, v=open_units, theta=thetas)
    @hsettings(max_examples=100, deadline=None)
    def test_log_pdf_matches_pdf(self, u, v, theta):
        c = core.pdf(u, v, theta)
        if c > 1e-300:
            self.assertAlmostEqual(core.log_pdf(u, v, theta), math.log(c), delta=1e-10 * max(1.0, abs(math.log(c))))

    def test_density_integrates_to_one(self):
        for theta in (0.5, 1.0, 5.0):
            a = DependenceParam(theta).threshold

            def inner(u):
                value, _ = integrate.quad(
                    lambda v: core.pdf(u, v, theta), a * (1 - u), 1.0,
                    points=[a] if u > 0 else None, epsabs=1e-12, limit=200,
                )
                return value

            total, _ = integrate.quad(inner, 0.0, 1.0, epsabs=1e-10, limit=200)
            self.assertAlmostEqual(total, 1.0, delta=1e-8)

    def test_laplacian_matches_second_derivatives(self):
        theta, h = 2.0, 1e-4
        for u, v in ((0.8, 0.3), (0.3, 0.9)):
            c = core.cdf
            numeric = (
                c(u + h, v, theta) + c(u - h, v, theta) + c(u, v + h, theta) + c(u, v - h, theta)
                - 4 * c(u, v, theta)
            ) / h**2
            self.assertAlmostEqual(core.laplacian(u, v, theta), numeric, delta=1e-5)
            self.assertGreaterEqual(core.laplacian(u, v, theta), 0.0)


class ConditionalTests(SimpleTestCase):
    @given(v=open_units, u=open_units, theta=thetas)
    @hsettings(max_examples=200, deadline=None)
    def test_quantile_inverts_cdf_v_given_u(self, v, u, theta):
        a = DependenceParam(theta).threshold
        if v <= a * (1 - u) * (1 + 1e-9):
            return
        p = core.cond_cdf_v_given_u(v, u, theta)
        if 1e-12 < p < 1 - 1e-6:
            self.assertAlmostEqual(core.cond_quantile_v_given_u(p, u, theta), v, delta=1e-9)

    @given(p=open_units, v=st.floats(min_value=1e-3, max_value=1.0, allow_nan=False), theta=st.floats(0.01, 10.0))
    @hsettings(max_examples=200, deadline=None)
    def test_cdf_inverts_quantile_u_given_v(self, p, v, theta):
        u = core.cond_quantile_u_given_v(p, v, theta)
        self.assertAlmostEqual(core.cond_cdf_u_given_v(u, v, theta), p, delta=1e-9)

    def test_quantile_rejects_closed_levels(self):
        for p in (0.0, 1.0, -0.2):
            with self.assertRaises(DomainError):
                core.cond_quantile_u_given_v(p, 0.5, 1)
            with self.assertRaises(DomainError):
                core.cond_quantile_v_given_u(p, 0.5, 1)

    def test_conditional_cdfs_are_nondecreasing(self):
        g = np.linspace(0.0, 1.0, 401)
        for theta in THETAS:
            for fixed in (0.1, 0.5, 0.9):
                self.assertTrue(np.all(np.diff(core.cond_cdf_v_given_u(g, fixed, theta)) >= -1e-14))
                self.assertTrue(np.all(np.diff(core.cond_cdf_u_given_v(g, fixed, theta)) >= -1e-14))

    def test_conditional_density_is_copula_density(self):
        self.assertEqual(core.cond_pdf_v_given_u(0.9, 0.3, 2), core.pdf(0.3, 0.9, 2))
        self.assertEqual(core.cond_pdf_u_given_v(0.3, 0.9, 2), core.pdf(0.3, 0.9, 2))


class ConditionalMomentTests(SimpleTestCase):
    def _quad_u_moments(self, v, theta):
        a = DependenceParam(theta).threshold
        kink = 1 - v / a
        points = [kink] if 0 < kink < 1 else None
        opts = dict(points=points, epsabs=1e-13, epsrel=1e-12, limit=200)
        m1, _ = integrate.quad(lambda u: u * core.pdf(u, v, theta), 0.0, 1.0, **opts)
        m2, _ = integrate.quad(lambda u: u * u * core.pdf(u, v, theta), 0.0, 1.0, **opts)
        return m1, m2 - m1**2

    def test_mean_var_u_given_v_against_quadrature(self):
        rng = np.random.default_rng(3)
        for v, theta in zip(rng.uniform(0.01, 0.99, 50), rng.uniform(0.1, 10.0, 50)):
            mean, var = core.cond_mean_var_u_given_v(v, theta)
            q_mean, q_var = self._quad_u_moments(v, theta)
            self.assertAlmostEqual(mean, q_mean, delta=1e-8)
            self.assertAlmostEqual(var, q_var, delta=1e-8)

    def test_mean_v_given_u_spot_value(self):
        self.assertAlmostEqual(core.cond_mean_v_given_u(0.5, 2.0), 13.0 / 24.0, places=12)

    def test_mean_v_given_u_against_quadrature(self):
        rng = np.random.default_rng(5)
        for u, theta in zip(rng.uniform(0.01, 0.99, 50), rng.uniform(0.1, 10.0, 50)):
            closed = core.cond_mean_v_given_u(u, theta)
            self.assertAlmostEqual(closed, core.quad_moment_v_given_u(u, theta, 1), delta=1e-8)

    def test_mean_v_given_u_near_removable_singularity(self):
        for theta in (1.0, 1.0 + 5e-4, 1.0 - 5e-4):
            values = core.cond_mean_v_given_u(np.array([0.2, 0.5, 0.8]), theta)
            expected = [core.quad_moment_v_given_u(u, theta, 1) for u in (0.2, 0.5, 0.8)]
            np.testing.assert_allclose(values, expected, atol=1e-10)
        # continuity across the switch to quadrature
        self.assertAlmostEqual(
            core.cond_mean_v_given_u(0.4, 1.0 - 1.01e-3), core.cond_mean_v_given_u(0.4, 1.0 - 0.99e-3), delta=1e-5
        )

    def test_var_v_given_u_against_quadrature(self):
        for theta in (0.3, 1.0, 2.0, 3.5, 8.0):
            for u in (0.1, 0.5, 0.9):
                m1 = core.quad_moment_v_given_u(u, theta, 1)
                m2 = core.quad_moment_v_given_u(u, theta, 2)
                self.assertAlmostEqual(core.cond_var_v_given_u(u, theta), m2 - m1**2, delta=1e-8)

    def test_regression_of_v_on_u_decreases(self):
        u = np.linspace(0.0, 0.99, 100)
        for theta in (0.5, 3.0):
            self.assertTrue(np.all(np.diff(core.cond_mean_v_given_u(u, theta)) < 0))


class MeasureTests(SimpleTestCase):
    def test_exact_values_at_one(self):
        self.assertAlmostEqual(core.spearman_rho(1), -2.0 / 3.0, places=15)
        self.assertEqual(core.kendall_tau(1), -0.5)

    def test_case_study_theta(self):
        self.assertAlmostEqual(core.spearman_rho(0.765), -0.590, delta=5e-4)

    def test_rho_below_tau(self):
        for m in core.dependence_curve(10.0, 50):
            self.assertLess(m.rho, m.tau)
            self.assertTrue(-1 < m.rho < 0 and -1 < m.tau < 0)

    def test_measures_decrease_in_theta(self):
        curve = core.dependence_curve(20.0, 200)
        self.assertTrue(np.all(np.diff([m.rho for m in curve]) < 0))
        self.assertTrue(np.all(np.diff([m.tau for m in curve]) < 0))

    @given(theta=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
    @hsettings(max_examples=200, deadline=None)
    def test_rho_inversion_round_trip(self, theta):
        rho = core.spearman_rho(theta)
        if -1 < rho < 0:
            self.assertAlmostEqual(core.spearman_rho(core.theta_from_rho(rho)), rho, delta=1e-12)

    @given(theta=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
    @hsettings(max_examples=200, deadline=None)
    def test_tau_inversion_round_trip(self, theta):
        tau = core.kendall_tau(theta)
        if -1 < tau < 0:
            self.assertAlmostEqual(core.kendall_tau(core.theta_from_tau(tau)), tau, delta=1e-12)

    def test_inversion_oracles(self):
        self.assertAlmostEqual(core.theta_from_rho(-2.0 / 3.0).theta, 1.0, places=12)
        self.assertAlmostEqual(core.theta_from_tau(-0.5).theta, 1.0, places=14)

    def test_inversion_rejects_values_outside_range(self):
        for bad in (0.0, 0.2, -1.0, -1.5):
            with self.assertRaises(DomainError):
                core.theta_from_rho(bad)
            with self.assertRaises(DomainError):
                core.theta_from_tau(bad)


class SamplerTests(SimpleTestCase):
    def test_same_seed_same_batch(self):
        a = sample_copula(1000, 2.0, 42)
        b = sample_copula(1000, 2.0, 42)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.v, b.v)
        self.assertFalse(np.array_equal(a.u, sample_copula(1000, 2.0, 43).u))

    def test_open_uniforms_stay_inside(self):
        x = open_uniforms(make_rng(0), 100000)
        self.assertTrue(np.all((x > 0) & (x < 1)))

    def test_streams_are_independent(self):
        a = open_uniforms(make_rng(1, stream=0, index=0), 10)
        b = open_uniforms(make_rng(1, stream=0, index=1), 10)
        self.assertFalse(np.array_equal(a, b))

    def test_draws_lie_on_support(self):
        for method in SAMPLING_METHODS:
            for theta in THETAS:
                batch = sample_copula(5000, theta, 9, method=method)
                a = DependenceParam(theta).threshold
                self.assertTrue(np.all(batch.v >= a * (1 - batch.u) - 1e-12))
                self.assertTrue(np.all((batch.u >= 0) & (batch.u <= 1) & (batch.v >= 0) & (batch.v <= 1)))

    def test_batch_records_rng(self):
        batch = sample_copula(3, 1.0, 7)
        self.assertEqual(len(batch), 3)
        self.assertEqual(batch.rng, rng_info(7))
        self.assertEqual(batch.rng["algorithm"], "numpy.random.PCG64")
        self.assertEqual(len(batch.pairs), 3)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(DomainError):
            sample_copula(0, 1.0, 0)
        with self.assertRaises(DomainError):
            sample_copula(10, 1.0, -1)
        with self.assertRaises(DomainError):
            sample_copula(10, -1.0, 0)
        with self.assertRaises(DomainError):
            sample_copula(10, 1.0, 0, method="bogus")

    @tag("slow")
    def test_large_sample_matches_measures(self):
        grid = np.linspace(0.05, 1.0, 20)
        for method in SAMPLING_METHODS:
            batch = sample_copula(200000, 1.0, 2024, method=method)
            self.assertAlmostEqual(stats.kendalltau(batch.u, batch.v).statistic, -0.5, delta=0.01)
            self.assertAlmostEqual(stats.spearmanr(batch.u, batch.v).statistic, -2.0 / 3.0, delta=0.01)
            worst = 0.0
            for gu in grid:
                below_u = batch.u <= gu
                for gv in grid:
                    empirical = np.mean(below_u & (batch.v <= gv))
                    worst = max(worst, abs(empirical - core.cdf(gu, gv, 1.0)))
            self.assertLessEqual(worst, 0.01)
            # margins are uniform
            self.assertLess(stats.kstest(batch.u, "uniform").statistic, 0.01)
            self.assertLess(stats.kstest(batch.v, "uniform").statistic, 0.01)

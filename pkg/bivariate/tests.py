import numpy as np
from django.test import SimpleTestCase, tag

from bivariate.closed_forms import baseline_joint_cdf, closed_form_pdf
from bivariate.composition import (
    BivariateModel,
    baseline_model,
    cond_cdf_y_given_x,
    cond_quantile_y_given_x,
    conditional_curves,
    joint_cdf,
    joint_pdf,
    joint_survival,
)
from copula.core import as_theta
from copula.sampler import sample_bivariate
from core.exceptions import DomainError
from marginals.distributions import MarginalModel


def support_levels(theta, n, seed):
    """Marginal levels (p, q) inside the Lower and Upper regions, away from region edges."""
    a = as_theta(theta).threshold
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < n:
        p, q = rng.uniform(0.01, 0.99, size=2)
        edge = a * (1.0 - p)
        if q > edge + 1e-6 and abs(q - a) > 1e-6:
            points.append((p, q))
    return np.array(points)


class BivariateModelTests(SimpleTestCase):
    def test_rejects_non_marginals(self):
        with self.assertRaises(DomainError):
            BivariateModel("gamma", MarginalModel.of("exponential", rate=1.0), 1.0)
        with self.assertRaises(DomainError):
            baseline_model(1.0, -1.0)

    def test_baseline_model_rates(self):
        model = baseline_model(2.0, 0.5)
        self.assertEqual(model.margin_y.param_dict, {"lam": 2.0, "mu": 1.0})
        self.assertEqual(model.theta.theta, 0.5)


class BaselineCompositionTests(SimpleTestCase):
    def test_composition_matches_direct_formula(self):
        grid = np.linspace(0.05, 5.0, 50)
        x, y = np.meshgrid(grid, grid, indexing="ij")
        for theta in (0.5, 1.0, 2.0):
            for lam in (0.5, 1.0, 3.0):
                with self.subTest(theta=theta, lam=lam):
                    model = baseline_model(lam, theta)
                    direct = baseline_joint_cdf(x, y, lam, theta * lam)
                    np.testing.assert_allclose(joint_cdf(model, x, y), direct, rtol=0, atol=1e-12)

    def test_spot_values(self):
        model = baseline_model(1.0, 1.0)
        self.assertAlmostEqual(joint_cdf(model, 1.0, 2.0), 0.415955, places=6)
        self.assertAlmostEqual(joint_cdf(model, 1.0, 0.5), 0.017456, places=6)
        # below the support line x = -log y there is no mass
        self.assertEqual(joint_cdf(model, 0.5, 0.5), 0.0)

    def test_survival_identity(self):
        model = baseline_model(1.5, 2.0)
        grid = np.linspace(0.1, 4.0, 20)
        x, y = np.meshgrid(grid, grid, indexing="ij")
        expected = 1.0 - model.margin_x.cdf(x) - model.margin_y.cdf(y) + joint_cdf(model, x, y)
        np.testing.assert_allclose(joint_survival(model, x, y), expected, atol=1e-12)


class ClosedFormDensityTests(SimpleTestCase):
    def assert_matches_composition(self, model, seed):
        levels = support_levels(model.theta, 100, seed)
        x = model.margin_x.quantile(levels[:, 0])
        y = model.margin_y.quantile(levels[:, 1])
        composed = joint_pdf(model, x, y)
        self.assertTrue(np.all(composed > 0))
        np.testing.assert_allclose(joint_pdf(model, x, y, closed_form=True), composed, rtol=1e-10)

    def test_weibull_pair(self):
        for theta in (0.3, 1.0, 4.0):
            with self.subTest(theta=theta):
                model = BivariateModel(
                    MarginalModel.of("weibull", rate=0.5, shape=1.5),
                    MarginalModel.of("weibull", rate=2.0, shape=0.8),
                    theta,
                )
                self.assert_matches_composition(model, seed=1)

    def test_gamma_pair(self):
        for theta in (0.3, 0.765, 4.0):
            with self.subTest(theta=theta):
                model = BivariateModel(
                    MarginalModel.of("gamma", shape=7.171, scale=1.375),
                    MarginalModel.of("gamma", shape=1.7, scale=24.775),
                    theta,
                )
                self.assert_matches_composition(model, seed=2)

    def test_exponential_pair_reduces_to_unit_shapes(self):
        model = BivariateModel(
            MarginalModel.of("exponential", rate=1.0),
            MarginalModel.of("exponential", rate=0.25),
            2.0,
        )
        self.assert_matches_composition(model, seed=3)

    def test_void_region_has_zero_density(self):
        model = BivariateModel(
            MarginalModel.of("gamma", shape=2.0, scale=1.0),
            MarginalModel.of("gamma", shape=3.0, scale=2.0),
            1.0,
        )
        a = model.theta.threshold
        x = model.margin_x.quantile(0.1)
        y = model.margin_y.quantile(0.1 * a)
        self.assertEqual(joint_pdf(model, x, y), 0.0)
        self.assertEqual(joint_pdf(model, x, y, closed_form=True), 0.0)

    def test_no_closed_form_for_mixed_families(self):
        model = BivariateModel(
            MarginalModel.of("gamma", shape=2.0, scale=1.0),
            MarginalModel.of("weibull", rate=1.0, shape=2.0),
            1.0,
        )
        with self.assertRaises(DomainError):
            closed_form_pdf(model, 1.0, 1.0)


class ConditionalTests(SimpleTestCase):
    def setUp(self):
        self.model = BivariateModel(
            MarginalModel.of("gamma", shape=7.171, scale=1.375),
            MarginalModel.of("gamma", shape=1.7, scale=24.775),
            0.765,
        )

    def test_conditional_cdf_increases_with_x(self):
        ys = np.linspace(0.0, 150.0, 301)
        low, mid, high = (cond_cdf_y_given_x(self.model, ys, x) for x in (5.7, 9.7, 14.9))
        self.assertTrue(np.all(low <= mid + 1e-15))
        self.assertTrue(np.all(mid <= high + 1e-15))
        self.assertTrue(np.all(np.diff(mid) >= -1e-15))

    def test_quantile_inverts_cdf(self):
        for x in (5.7, 9.7, 14.9):
            for p in (0.05, 0.5, 0.95):
                y = cond_quantile_y_given_x(self.model, p, x)
                self.assertAlmostEqual(cond_cdf_y_given_x(self.model, y, x), p, places=9)

    def test_conditional_curves(self):
        curves = conditional_curves(self.model, [5.7, 14.9], n_points=50)
        self.assertEqual([c["x"] for c in curves], [5.7, 14.9])
        for curve in curves:
            self.assertEqual(len(curve["y"]), 50)
            self.assertEqual(curve["y"][0], 0.0)
            self.assertTrue(np.all(np.diff(curve["cdf"]) >= -1e-15))
        self.assertTrue(np.all(curves[0]["cdf"] <= curves[1]["cdf"] + 1e-15))
        self.assertGreater(curves[1]["cdf"][-1], 0.99)


class SampleBivariateTests(SimpleTestCase):
    def setUp(self):
        self.model = BivariateModel(
            MarginalModel.of("gamma", shape=7.171, scale=1.375),
            MarginalModel.of("gamma", shape=1.7, scale=24.775),
            0.765,
        )

    def test_single_draw(self):
        sample = sample_bivariate(1, self.model, seed=0)
        self.assertEqual(len(sample), 1)
        self.assertTrue(np.all(np.isfinite(sample.x)) and np.all(sample.x > 0))
        self.assertTrue(np.all(np.isfinite(sample.y)) and np.all(sample.y > 0))

    def test_margins_are_applied_to_the_copula_batch(self):
        sample = sample_bivariate(500, self.model, seed=3, method="v_given_u")
        np.testing.assert_allclose(sample.x, self.model.margin_x.quantile(sample.copula.u))
        np.testing.assert_allclose(sample.y, self.model.margin_y.quantile(sample.copula.v))
        self.assertEqual(sample.copula.method, "v_given_u")

    def test_same_seed_same_sample(self):
        first = sample_bivariate(200, self.model, seed=8)
        second = sample_bivariate(200, self.model, seed=8)
        np.testing.assert_array_equal(first.x, second.x)
        np.testing.assert_array_equal(first.y, second.y)

    def test_rejects_empty_sample(self):
        with self.assertRaises(DomainError):
            sample_bivariate(0, self.model, seed=0)


@tag("slow")
class SampleBivariateLawTests(SimpleTestCase):
    def test_exponential_means(self):
        model = BivariateModel(
            MarginalModel.of("exponential", rate=1.0),
            MarginalModel.of("exponential", rate=1.0),
            1.0,
        )
        sample = sample_bivariate(100000, model, seed=1)
        self.assertAlmostEqual(sample.x.mean(), 1.0, delta=0.02)
        self.assertAlmostEqual(sample.y.mean(), 1.0, delta=0.02)

    def test_gamma_mean(self):
        model = BivariateModel(
            MarginalModel.of("gamma", shape=7.171, scale=1.375),
            MarginalModel.of("gamma", shape=1.7, scale=24.775),
            0.765,
        )
        sample = sample_bivariate(100000, model, seed=2)
        self.assertAlmostEqual(sample.x.mean(), 9.86, delta=0.01 * 9.86)

    def test_empirical_cdf_approaches_joint_cdf(self):
        model = BivariateModel(
            MarginalModel.of("gamma", shape=7.171, scale=1.375),
            MarginalModel.of("gamma", shape=1.7, scale=24.775),
            0.765,
        )
        sample = sample_bivariate(100000, model, seed=4)
        levels = np.linspace(0.05, 0.95, 15)
        xs = model.margin_x.quantile(levels)
        ys = model.margin_y.quantile(levels)
        worst = 0.0
        for x in xs:
            below = sample.x <= x
            for y in ys:
                empirical = np.mean(below & (sample.y <= y))
                worst = max(worst, abs(empirical - joint_cdf(model, x, y)))
        self.assertLess(worst, 0.01)

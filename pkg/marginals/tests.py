import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st
from scipy import stats

from core.exceptions import DomainError, InsufficientData, NonPositiveData
from core.ingest import airquality_path, read_paired_csv
from marginals.distributions import Family, MarginalModel, parse_marginal
from marginals.fitting import method_of_moments, mle_fit, select_by_aic


class MarginalModelTests(SimpleTestCase):
    def test_parse_marginal(self):
        model = parse_marginal("gamma:shape=2,scale=3")
        self.assertEqual(model.family, Family.GAMMA)
        self.assertEqual(model.param_dict, {"shape": 2.0, "scale": 3.0})
        self.assertEqual(str(model), "gamma(shape=2, scale=3)")

    def test_parse_rejects_malformed_text(self):
        for text in ("gamma:shape=2", "gamma:shape=2,scale=x", "gamma:shape2,scale=1", "cauchy:loc=1"):
            with self.assertRaises(DomainError):
                parse_marginal(text)

    def test_rejects_invalid_parameters(self):
        with self.assertRaises(DomainError):
            MarginalModel.of("weibull", rate=-1.0, shape=2.0)
        with self.assertRaises(DomainError):
            MarginalModel.of("exponential", rate=math.inf)
        # meanlog may be negative
        self.assertEqual(MarginalModel.of("lognormal", meanlog=-1.0, sdlog=0.5).k, 2)

    def test_weibull_rate_parameterisation(self):
        model = MarginalModel.of("weibull", rate=0.5, shape=2.0)
        x = np.array([0.5, 1.0, 3.0])
        np.testing.assert_allclose(model.cdf(x), 1 - np.exp(-((0.5 * x) ** 2)), rtol=1e-14)
        self.assertAlmostEqual(model.quantile(model.cdf(1.7)), 1.7, places=12)

    def test_support_checks(self):
        model = MarginalModel.of("exponential", rate=1.0)
        with self.assertRaises(DomainError):
            model.cdf(-1.0)
        with self.assertRaises(DomainError):
            model.quantile(1.5)
        self.assertEqual(model.cdf(math.inf), 1.0)
        self.assertEqual(model.sf(0.0), 1.0)

    def test_baseline_y_law(self):
        model = MarginalModel.of("baseline_y", lam=2.0, mu=3.0)
        a = 3.0 / 5.0
        self.assertAlmostEqual(model.cdf(1.0), a, places=15)
        self.assertAlmostEqual(model.cdf(np.nextafter(1.0, 2.0)), a, places=12)
        self.assertAlmostEqual(model.cdf(0.5), a * 0.25, places=15)
        self.assertAlmostEqual(model.cdf(2.0), 1 - 0.4 / 8.0, places=15)
        for p in (0.1, a, 0.9):
            self.assertAlmostEqual(model.cdf(model.quantile(p)), p, places=12)
        self.assertAlmostEqual(model.sf(2.0), 0.4 / 8.0, places=15)

    def test_baseline_y_density_integrates_to_cdf(self):
        from scipy import integrate

        model = MarginalModel.of("baseline_y", lam=1.5, mu=2.5)
        total, _ = integrate.quad(model.pdf, 0.0, 1.0)
        tail, _ = integrate.quad(model.pdf, 1.0, np.inf)
        self.assertAlmostEqual(total, model.cdf(1.0), places=10)
        self.assertAlmostEqual(total + tail, 1.0, places=10)

    def test_baseline_y_mean(self):
        model = MarginalModel.of("baseline_y", lam=1.0, mu=3.0)
        rng = np.random.default_rng(0)
        draws = model.quantile(rng.uniform(size=400000))
        self.assertAlmostEqual(draws.mean(), model.mean(), delta=0.02)
        self.assertEqual(MarginalModel.of("baseline_y", lam=1.0, mu=0.5).mean(), math.inf)

    @given(p=st.floats(min_value=1e-9, max_value=1 - 1e-9), family=st.sampled_from(["weibull", "gamma", "lognormal"]))
    @hsettings(max_examples=100, deadline=None)
    def test_quantile_inverts_cdf(self, p, family):
        model = {
            "weibull": MarginalModel.of("weibull", rate=0.3, shape=1.7),
            "gamma": MarginalModel.of("gamma", shape=2.5, scale=4.0),
            "lognormal": MarginalModel.of("lognormal", meanlog=0.2, sdlog=0.8),
        }[family]
        self.assertAlmostEqual(model.cdf(model.quantile(p)), p, delta=1e-10)


class FittingTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_exponential_closed_form(self):
        x = self.rng.exponential(2.0, size=500)
        fit = mle_fit("exponential", x)
        self.assertAlmostEqual(fit.model.param_dict["rate"], 1 / x.mean(), places=14)
        self.assertAlmostEqual(fit.aic, 2 - 2 * fit.log_likelihood, places=10)

    def test_lognormal_closed_form(self):
        x = self.rng.lognormal(0.5, 0.7, size=500)
        params = mle_fit("lognormal", x).model.param_dict
        self.assertAlmostEqual(params["meanlog"], np.log(x).mean(), places=12)
        self.assertAlmostEqual(params["sdlog"], np.log(x).std(), places=12)

    def test_gamma_matches_scipy(self):
        x = self.rng.gamma(3.0, 2.0, size=2000)
        fit = mle_fit("gamma", x)
        shape, _, scale = stats.gamma.fit(x, floc=0)
        self.assertAlmostEqual(fit.model.param_dict["shape"], shape, delta=1e-5 * shape)
        self.assertAlmostEqual(fit.model.param_dict["scale"], scale, delta=1e-5 * scale)
        self.assertLessEqual(fit.gradient_norm, 1e-8)
        self.assertGreater(fit.iterations, 0)

    def test_weibull_matches_scipy(self):
        x = 3.0 * self.rng.weibull(1.8, size=2000)
        fit = mle_fit("weibull", x)
        shape, _, scale = stats.weibull_min.fit(x, floc=0)
        self.assertAlmostEqual(fit.model.param_dict["shape"], shape, delta=1e-3 * shape)
        self.assertAlmostEqual(fit.model.param_dict["rate"], 1 / scale, delta=1e-3 / scale)
        self.assertLess(fit.gradient_norm, 1e-4)

    def test_weibull_fit_on_large_values(self):
        # powers of x would overflow without rescaling
        x = 1e6 * self.rng.weibull(12.0, size=300)
        fit = mle_fit("weibull", x)
        self.assertAlmostEqual(fit.model.param_dict["shape"], 12.0, delta=2.0)

    def test_mle_improves_on_moment_start(self):
        samples = {
            "gamma": self.rng.gamma(1.3, 5.0, size=300),
            "weibull": 2.0 * self.rng.weibull(0.9, size=300),
        }
        for family, x in samples.items():
            with self.subTest(family=family):
                start = method_of_moments(family, x)
                fit = mle_fit(family, x)
                self.assertGreaterEqual(fit.log_likelihood, float(np.sum(start.log_pdf(x))))

    def test_method_of_moments_starts(self):
        x = self.rng.gamma(3.0, 2.0, size=5000)
        self.assertAlmostEqual(method_of_moments("gamma", x).param_dict["shape"], 3.0, delta=0.3)
        self.assertAlmostEqual(method_of_moments("exponential", x).param_dict["rate"], 1 / x.mean())

    def test_rejects_bad_data(self):
        with self.assertRaises(NonPositiveData):
            mle_fit("gamma", [1.0, 0.0, 2.0])
        with self.assertRaises(NonPositiveData):
            mle_fit("gamma", [1.0, np.nan, 2.0])
        with self.assertRaises(InsufficientData):
            mle_fit("gamma", [1.0])
        with self.assertRaises(DomainError):
            mle_fit("baseline_y", [1.0, 2.0])

    def test_aic_selection(self):
        x = self.rng.lognormal(0.0, 1.0, size=5000)
        best = select_by_aic(x, ["weibull", "gamma", "lognormal"])
        self.assertEqual(best.model.family, Family.LOGNORMAL)
        self.assertEqual(set(best.aic_table), {"weibull", "gamma", "lognormal"})
        self.assertEqual(best.aic, min(best.aic_table.values()))
        self.assertEqual(best.excluded, ())

    def test_aic_needs_two_families(self):
        with self.assertRaises(DomainError):
            select_by_aic([1.0, 2.0, 3.0], ["gamma"])
        with self.assertRaises(DomainError):
            select_by_aic([1.0, 2.0, 3.0], ["gamma", "gamma"])

    def test_aic_excludes_failed_fits(self):
        # constant data: the shape equations have no root, only exponential fits
        with self.assertLogs("marginals.fitting", level="WARNING"):
            best = select_by_aic([2.0] * 10, ["exponential", "gamma"])
        self.assertEqual(best.model.family, Family.EXPONENTIAL)
        self.assertEqual(best.excluded, ("gamma",))
        self.assertIsNone(best.aic_table["gamma"])


class AirQualityMarginTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.data = read_paired_csv(airquality_path(), "Wind", "Ozone")

    def test_gamma_fits(self):
        wind = mle_fit("gamma", self.data.x).model.param_dict
        ozone = mle_fit("gamma", self.data.y).model.param_dict
        self.assertAlmostEqual(wind["shape"], 7.171, delta=0.01 * 7.171)
        self.assertAlmostEqual(wind["scale"], 1.375, delta=0.01 * 1.375)
        self.assertAlmostEqual(ozone["shape"], 1.7, delta=0.01 * 1.7)
        self.assertAlmostEqual(ozone["scale"], 24.775, delta=0.01 * 24.775)

    def test_gamma_wins_aic_for_both_columns(self):
        for column in (self.data.x, self.data.y):
            best = select_by_aic(column, ["lognormal", "weibull", "gamma"])
            self.assertEqual(best.model.family, Family.GAMMA)
            self.assertEqual(best.excluded, ())

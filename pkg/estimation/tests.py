import json
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, override_settings, tag

from bivariate.composition import BivariateModel
from copula.core import UnitPoint, as_theta, spearman_rho
from copula.sampler import make_rng, open_uniforms, sample_bivariate, sample_copula
from core.exceptions import (
    BootstrapFailure,
    ConstantColumn,
    DomainError,
    FailedConvergence,
    InsufficientData,
    PipelineError,
    PositiveDependence,
)
from core.ingest import airquality_path, read_paired_csv
from core.output import json_text
from estimation.goodness import ks_statistic, ks_test_bootstrap
from estimation.pipeline import PipelineConfig, fit_pipeline
from estimation.ranks import (
    PairedData,
    empirical_rho,
    empirical_tau,
    estimate_theta,
    pseudo_observations,
    rank_transform,
)
from estimation.serializers import FitReportSerializer
from marginals.distributions import MarginalModel
from marginals.fitting import mle_fit


def airquality():
    return read_paired_csv(airquality_path(), "Wind", "Ozone")


class PairedDataTests(SimpleTestCase):
    def test_from_columns_drops_incomplete_rows(self):
        with self.assertLogs("estimation.ranks", level="INFO"):
            data = PairedData.from_columns([1.0, np.nan, 3.0, 4.0, 5.0], [2.0, 1.0, np.nan, 0.5, 0.1])
        self.assertEqual(data.n, 3)
        self.assertEqual(len(data), 3)
        self.assertEqual(data.dropped, 2)
        self.assertEqual(list(data.x), [1.0, 4.0, 5.0])

    def test_rejects_short_or_ragged_columns(self):
        with self.assertRaises(InsufficientData):
            PairedData([1.0, 2.0], [2.0, 1.0])
        with self.assertRaises(DomainError):
            PairedData([1.0, 2.0, 3.0], [2.0, 1.0])
        with self.assertRaises(DomainError):
            PairedData([1.0, 2.0, np.inf], [3.0, 2.0, 1.0])


class RankTests(SimpleTestCase):
    def test_pseudo_observations(self):
        points = pseudo_observations(([3.0, 1.0, 2.0], [1.0, 3.0, 2.0]))
        self.assertEqual(points, [UnitPoint(0.75, 0.25), UnitPoint(0.25, 0.75), UnitPoint(0.5, 0.5)])

    def test_ties_get_average_ranks(self):
        u, v = rank_transform(([1.0, 1.0, 2.0], [3.0, 2.0, 1.0]))
        self.assertEqual(list(u), [0.375, 0.375, 0.75])

    def test_countermonotone_data(self):
        x = np.arange(1.0, 11.0)
        data = PairedData(x, -x)
        self.assertAlmostEqual(empirical_rho(data), -1.0, places=14)
        self.assertAlmostEqual(empirical_tau(data), -1.0, places=14)
        # -1 lies outside the range of the family
        with self.assertRaises(DomainError):
            estimate_theta(data)

    def test_positive_dependence_is_refused(self):
        x = np.arange(1.0, 11.0)
        with self.assertRaises(PositiveDependence) as ctx:
            estimate_theta(PairedData(x, x**2), "tau_inversion")
        self.assertEqual(ctx.exception.exit_code, 3)
        self.assertIn("not negative", str(ctx.exception))

    def test_constant_column(self):
        with self.assertRaises(ConstantColumn):
            empirical_rho(PairedData([1.0, 2.0, 3.0], [5.0, 5.0, 5.0]))

    def test_unknown_method(self):
        with self.assertRaises(DomainError):
            estimate_theta(PairedData([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]), "mle")

    def test_rank_statistics_are_invariant_to_monotone_maps(self):
        rng = np.random.default_rng(4)
        x = rng.gamma(2.0, size=200)
        y = 1.0 / (x + rng.gamma(1.0, size=200))
        base = PairedData(x, y)
        mapped = PairedData(np.log(x), np.exp(y))
        self.assertEqual(empirical_rho(base), empirical_rho(mapped))
        self.assertEqual(empirical_tau(base), empirical_tau(mapped))
        self.assertEqual(estimate_theta(base), estimate_theta(mapped))

    def test_estimate_recovers_theta_from_a_sample(self):
        batch = sample_copula(20000, 0.765, seed=5)
        data = PairedData(batch.u, batch.v)
        self.assertAlmostEqual(estimate_theta(data).theta, 0.765, delta=0.05)
        self.assertAlmostEqual(estimate_theta(data, "tau_inversion").theta, 0.765, delta=0.05)

    def test_airquality_dependence(self):
        data = airquality()
        self.assertEqual((data.n, data.dropped), (116, 37))
        self.assertAlmostEqual(empirical_rho(data), -0.59, delta=0.005)
        self.assertAlmostEqual(empirical_tau(data), -0.43, delta=0.005)
        theta = estimate_theta(data)
        self.assertAlmostEqual(theta.theta, 0.765, delta=0.005)
        self.assertAlmostEqual(spearman_rho(theta), empirical_rho(data), delta=1e-10)


class GoodnessOfFitTests(SimpleTestCase):
    def setUp(self):
        rng = make_rng(9)
        self.model = MarginalModel.of("gamma", shape=2.0, scale=3.0)
        self.column = self.model.quantile(open_uniforms(rng, 60))
        self.fitted = mle_fit("gamma", self.column).model

    def test_statistic_matches_definition(self):
        x = np.sort(self.column)
        n = x.size
        f = self.fitted.cdf(x)
        expected = max(np.max(np.arange(1, n + 1) / n - f), np.max(f - np.arange(n) / n))
        self.assertAlmostEqual(ks_statistic(self.column, self.fitted), expected, places=14)

    def test_bootstrap_is_deterministic(self):
        first = ks_test_bootstrap(self.column, self.fitted, 100, seed=42, stream=1)
        second = ks_test_bootstrap(self.column, self.fitted, 100, seed=42, stream=1)
        self.assertEqual(first, second)
        self.assertTrue(0.0 <= first.p_value <= 1.0)
        self.assertEqual((first.n_bootstrap, first.seed, first.stream, first.dropped), (100, 42, 1, 0))

    def test_bootstrap_ignores_worker_count(self):
        serial = ks_test_bootstrap(self.column, self.fitted, 120, seed=1, workers=1)
        pooled = ks_test_bootstrap(self.column, self.fitted, 120, seed=1, workers=4)
        self.assertEqual(serial, pooled)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(DomainError):
            ks_test_bootstrap(self.column, self.fitted, 99, seed=0)
        with self.assertRaises(DomainError):
            ks_test_bootstrap(self.column, self.fitted, 100, seed=-1)
        with self.assertRaises(DomainError):
            ks_test_bootstrap(self.column, MarginalModel.of("baseline_y", lam=1.0, mu=1.0), 100, seed=0)

    def test_refit_failures_beyond_the_limit(self):
        failure = FailedConvergence("gamma Newton iteration did not converge")
        with mock.patch("estimation.goodness.mle_fit", side_effect=failure):
            with self.assertRaises(BootstrapFailure), self.assertLogs("estimation.goodness", level="WARNING"):
                ks_test_bootstrap(self.column, self.fitted, 100, seed=0, workers=1)

    @override_settings(NEGACOPULA_MAX_BOOTSTRAP_DROP=0.5)
    def test_dropped_replicates_are_counted(self):
        calls = iter(range(1000))

        def flaky(family, data):
            if next(calls) % 4 == 0:
                raise FailedConvergence("gamma Newton iteration did not converge")
            return mle_fit(family, data)

        with mock.patch("estimation.goodness.mle_fit", side_effect=flaky):
            result = ks_test_bootstrap(self.column, self.fitted, 100, seed=0, workers=1)
        self.assertEqual(result.dropped, 25)


class FitPipelineTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = fit_pipeline(airquality(), PipelineConfig(bootstrap=100, seed=42, conditioning=(5.7, 14.9)))

    def test_case_study_values(self):
        report = self.report
        self.assertEqual((report.n, report.dropped_rows), (116, 37))
        self.assertEqual(report.columns, {"x": "Wind", "y": "Ozone"})
        self.assertAlmostEqual(report.rho_emp, -0.59, delta=0.005)
        self.assertAlmostEqual(report.tau_emp, -0.43, delta=0.005)
        self.assertAlmostEqual(report.theta_hat.theta, 0.765, delta=0.005)
        self.assertEqual(set(report.marginal_x.aic_table), {"lognormal", "weibull", "gamma"})
        families = (report.marginal_x.model.family.value, report.marginal_y.model.family.value)
        self.assertEqual(families, ("gamma", "gamma"))
        self.assertEqual((report.ks_x.stream, report.ks_y.stream), (1, 2))
        self.assertEqual(report.rng["seed"], 42)
        self.assertEqual([c["x"] for c in report.conditional_curves], [5.7, 14.9])

    def test_rerun_is_identical(self):
        again = fit_pipeline(airquality(), PipelineConfig(bootstrap=100, seed=42, conditioning=(5.7, 14.9)))
        self.assertEqual(json_text(FitReportSerializer(again).data), json_text(FitReportSerializer(self.report).data))

    def test_serialized_report_validates(self):
        payload = json.loads(json_text(FitReportSerializer(self.report).data))
        self.assertTrue({"marginals", "rho_emp", "tau_emp", "theta_hat", "ks", "dropped_rows", "rng"} <= set(payload))
        self.assertEqual(set(payload["ks"]["x"]), {"statistic", "p_value", "B", "seed", "stream", "dropped"})
        serializer = FitReportSerializer(data=payload)
        self.assertTrue(serializer.is_valid(), serializer.errors)

    def test_positive_dependence_stops_the_pipeline(self):
        x = np.arange(1.0, 21.0)
        with self.assertRaises(PipelineError) as ctx:
            fit_pipeline(PairedData(x, x + 1.0), PipelineConfig(bootstrap=100, seed=0))
        self.assertEqual(ctx.exception.stage, "dependence")
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_non_positive_margin_names_the_column(self):
        data = PairedData.from_columns([1.0, 2.0, 3.0, 0.0], [4.0, 3.0, 2.0, 1.0], labels=("a", "b"))
        with self.assertRaises(PipelineError) as ctx:
            fit_pipeline(data, PipelineConfig(bootstrap=100, seed=0))
        self.assertEqual(ctx.exception.stage, "marginal selection")
        self.assertIn("x (a)", str(ctx.exception))
        self.assertEqual(ctx.exception.exit_code, 2)


@tag("slow")
class BootstrapCalibrationTests(SimpleTestCase):
    def test_airquality_p_values(self):
        data = airquality()
        wind = ks_test_bootstrap(data.x, mle_fit("gamma", data.x).model, 10000, seed=42, stream=1)
        ozone = ks_test_bootstrap(data.y, mle_fit("gamma", data.y).model, 10000, seed=42, stream=2)
        self.assertAlmostEqual(wind.statistic, 0.0753, delta=5e-4)
        self.assertAlmostEqual(ozone.statistic, 0.0875, delta=5e-4)
        # refit bootstrap on the 116 complete pairs; Ozone is borderline at 5%
        self.assertAlmostEqual(wind.p_value, 0.108, delta=0.02)
        self.assertAlmostEqual(ozone.p_value, 0.035, delta=0.015)
        self.assertEqual((wind.dropped, ozone.dropped), (0, 0))

    def test_rejection_rate_under_the_null(self):
        data = airquality()
        model = mle_fit("gamma", data.x).model
        rejections = 0
        repetitions = 400
        for i in range(repetitions):
            column = model.quantile(open_uniforms(make_rng(2024, 11, i), data.n))
            fitted = mle_fit("gamma", column).model
            result = ks_test_bootstrap(column, fitted, 200, seed=i, stream=3)
            rejections += result.p_value < 0.05
        self.assertAlmostEqual(rejections / repetitions, 0.05, delta=0.03)

    def test_pipeline_recovers_a_simulated_model(self):
        model = BivariateModel(
            MarginalModel.of("gamma", shape=7.171, scale=1.375),
            MarginalModel.of("gamma", shape=1.7, scale=24.775),
            0.765,
        )
        sample = sample_bivariate(10000, model, seed=42, stream=5)
        report = fit_pipeline(PairedData(sample.x, sample.y), PipelineConfig(bootstrap=100, seed=42))
        self.assertAlmostEqual(report.theta_hat.theta, 0.765, delta=0.05)
        self.assertAlmostEqual(report.rho_emp, spearman_rho(as_theta(0.765)), delta=0.03)
        self.assertAlmostEqual(report.marginal_x.model.param_dict["shape"], 7.171, delta=0.05 * 7.171)
        self.assertAlmostEqual(report.marginal_y.model.param_dict["scale"], 24.775, delta=0.05 * 24.775)



class PipelineConfigTests(SimpleTestCase):
    @override_settings(NEGACOPULA_DEFAULT_BOOTSTRAP=500, NEGACOPULA_DEFAULT_SEED=7)
    def test_unset_knobs_come_from_settings(self):
        config = PipelineConfig().resolved()
        self.assertEqual((config.bootstrap, config.seed), (500, 7))

    def test_explicit_zero_bootstrap_is_kept_and_rejected(self):
        self.assertEqual(PipelineConfig(bootstrap=0).resolved().bootstrap, 0)
        with self.assertRaises(PipelineError) as ctx:
            fit_pipeline(airquality(), PipelineConfig(bootstrap=0, seed=0))
        self.assertEqual(ctx.exception.stage, "goodness of fit")
        self.assertEqual(ctx.exception.exit_code, 2)

from django.test import SimpleTestCase, tag

from audit.checks import (
    AuditReport,
    audit_absolute_continuity,
    audit_boundary_conditions,
    audit_frechet_bounds,
    audit_measures,
    audit_nlr,
    audit_nqd,
    audit_order_nlr,
    audit_order_nqd,
    audit_order_nrd,
    audit_rectangle_inequality,
    audit_stochastic_monotonicity,
    audit_subharmonic,
    audit_tail_monotonicity,
    interior_grid,
    run_standard_suite,
)
from core.exceptions import DomainError

THETAS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
PAIRS = ((0.1, 0.5), (0.5, 1.0), (1.0, 2.0), (2.0, 5.0), (5.0, 10.0))


class AuditReportTests(SimpleTestCase):
    def test_passed_follows_tolerance(self):
        self.assertTrue(AuditReport("x", 1.0, "", 1e-13, 1e-12).passed)
        self.assertTrue(AuditReport("x", 1.0, "", 1e-12, 1e-12).passed)
        self.assertFalse(AuditReport("x", 1.0, "", 2e-12, 1e-12).passed)

    def test_interior_grid(self):
        self.assertEqual(list(interior_grid(3)), [0.25, 0.5, 0.75])


class CopulaAxiomAuditTests(SimpleTestCase):
    def test_boundary_and_frechet(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                self.assertTrue(audit_boundary_conditions(theta).passed)
                self.assertTrue(audit_frechet_bounds(theta, resolution=101).passed)

    def test_rectangle_inequality(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                report = audit_rectangle_inequality(theta, n_rect=4000)
                self.assertTrue(report.passed, report)
                self.assertGreaterEqual(report.details["min_volume"], -1e-12)

    def test_rectangle_inequality_is_seeded(self):
        first = audit_rectangle_inequality(1.0, n_rect=500, seed=3)
        second = audit_rectangle_inequality(1.0, n_rect=500, seed=3)
        self.assertEqual(first, second)

    def test_rejects_empty_rectangle_set(self):
        with self.assertRaises(DomainError):
            audit_rectangle_inequality(1.0, n_rect=0)


class DependenceAuditTests(SimpleTestCase):
    def test_nqd(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                self.assertTrue(audit_nqd(theta, resolution=101).passed)

    def test_tail_monotonicity(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                report = audit_tail_monotonicity(theta, resolution=80)
                self.assertTrue(report.passed, report)
                self.assertEqual(
                    set(report.details),
                    {"lti_y_given_x", "lti_x_given_y", "rtd_y_given_x", "rtd_x_given_y"},
                )

    def test_stochastic_monotonicity(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                report = audit_stochastic_monotonicity(theta, resolution=80)
                self.assertTrue(report.passed, report)
                # stencils straddling the support line or v = a are set aside
                self.assertGreater(report.details["excluded_u"], 0)

    def test_subharmonic(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                report = audit_subharmonic(theta, resolution=119)
                self.assertTrue(report.passed, report)
                self.assertGreaterEqual(report.details["analytic_min"], 0.0)

    def test_nlr_holds_with_equality_on_support(self):
        for theta in THETAS:
            with self.subTest(theta=theta):
                report = audit_nlr(theta, n_quad=2000)
                self.assertTrue(report.passed, report)
                self.assertGreater(report.details["in_support"], 0)
                self.assertLessEqual(report.details["equality_error"], 1e-10)


class OrderingAuditTests(SimpleTestCase):
    def test_order_nqd(self):
        for pair in PAIRS:
            with self.subTest(pair=pair):
                self.assertTrue(audit_order_nqd(*pair, resolution=101).passed)

    def test_order_nqd_equal_parameters(self):
        self.assertEqual(audit_order_nqd(2.0, 2.0, resolution=51).worst_violation, 0.0)

    def test_order_nrd(self):
        for pair in PAIRS:
            with self.subTest(pair=pair):
                self.assertTrue(audit_order_nrd(*pair, 60, 60).passed)

    def test_order_nlr(self):
        for pair in PAIRS[:3]:
            with self.subTest(pair=pair):
                self.assertTrue(audit_order_nlr(*pair, n_quad=2000).passed)

    def test_reversed_pair_is_rejected(self):
        for audit in (audit_order_nqd, audit_order_nrd, audit_order_nlr):
            with self.subTest(audit=audit.__name__), self.assertRaises(DomainError):
                audit(2.0, 1.0)


class SuiteTests(SimpleTestCase):
    def test_suite_order_is_fixed(self):
        reports = run_standard_suite(1.0, (0.5, 1.0), resolution=40, n_random=500)
        self.assertEqual(
            [r.check_name for r in reports],
            [
                "boundary_conditions", "frechet_bounds", "rectangle_inequality", "nqd",
                "tail_monotonicity", "stochastic_monotonicity", "subharmonic", "nlr",
                "absolute_continuity", "measures",
                "order_nqd", "order_nrd", "order_nlr",
            ],
        )
        self.assertTrue(all(r.passed for r in reports))
        self.assertEqual(reports[-1].theta, (0.5, 1.0))
        self.assertEqual(reports[8].grid_spec, "20 random points (seed=0)")
        self.assertLess(reports[9].details["rho"], reports[9].details["tau"])

    def test_worker_count_does_not_change_results(self):
        serial = run_standard_suite(2.0, resolution=30, n_random=300, workers=1)
        pooled = run_standard_suite(2.0, resolution=30, n_random=300, workers=4)
        self.assertEqual(serial, pooled)

    def test_needs_something_to_audit(self):
        with self.assertRaises(DomainError):
            run_standard_suite()
        with self.assertRaises(DomainError):
            run_standard_suite(theta_pair=(3.0, 1.0))


@tag("slow")
class QuadratureAuditTests(SimpleTestCase):
    def test_absolute_continuity(self):
        for theta in (0.5, 1.0, 5.0):
            with self.subTest(theta=theta):
                report = audit_absolute_continuity(theta, n_points=100)
                self.assertTrue(report.passed, report)

    def test_measures_match_quadrature(self):
        for theta in (0.25, 0.765, 1.0, 3.0):
            with self.subTest(theta=theta):
                report = audit_measures(theta)
                self.assertTrue(report.passed, report)
                self.assertLess(report.details["rho"], report.details["tau"])

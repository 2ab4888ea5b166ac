import io
import json
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from scipy import stats

from audit.checks import AuditReport
from core.exceptions import DataParseError, InsufficientData
from core.forms import FitForm, SampleForm
from core.ingest import airquality_path, read_fit_report, read_paired_csv
from core.output import csv_text, json_text, seventeen_digits

SCHEMA_DIR = Path(__file__).resolve().parent / "schemas"


def run(name, **options):
    """call_command with captured stdout; returns the text written."""
    out = io.StringIO()
    call_command(name, stdout=out, stderr=io.StringIO(), **options)
    return out.getvalue()


def read_csv(text):
    return np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.addCleanup(self._tmp.cleanup)

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return path


class IngestTests(TempDirMixin, SimpleTestCase):
    def test_airquality_missing_values(self):
        data = read_paired_csv(airquality_path(), "Wind", "Ozone")
        self.assertEqual((data.n, data.dropped), (116, 37))
        self.assertEqual(data.labels, ("Wind", "Ozone"))
        self.assertTrue(np.all(data.y > 0))

    def test_headers_are_stripped(self):
        path = self.write("d.csv", " a , b \n1,3\n2,2\n3,1\n")
        data = read_paired_csv(path, "a", "b")
        self.assertEqual(list(data.y), [3.0, 2.0, 1.0])

    def test_bad_value_reports_physical_line(self):
        path = self.write("d.csv", "a,b\n1,2\n\n3,x\n")
        with self.assertRaises(DataParseError) as ctx:
            read_paired_csv(path, "a", "b")
        self.assertEqual(ctx.exception.line, 4)
        self.assertIn("'b'", str(ctx.exception))

    def test_wrong_field_count(self):
        path = self.write("d.csv", "a,b\n1,2\n3,4,5\n")
        with self.assertRaises(DataParseError) as ctx:
            read_paired_csv(path, "a", "b")
        self.assertEqual(ctx.exception.line, 3)

    def test_missing_column_lists_headers(self):
        path = self.write("d.csv", "a,b\n1,2\n")
        with self.assertRaisesMessage(DataParseError, "available headers: a, b"):
            read_paired_csv(path, "a", "c")

    def test_too_few_complete_rows(self):
        path = self.write("d.csv", "a,b\n1,2\n2,NA\n3,1\n")
        with self.assertRaises(InsufficientData):
            read_paired_csv(path, "a", "b")

    def test_unreadable_report(self):
        with self.assertRaises(DataParseError):
            read_fit_report(self.write("r.json", "{not json"))
        with self.assertRaises(DataParseError):
            read_fit_report(self.write("r.json", json.dumps({"theta_hat": 1.0})))


class OutputTests(SimpleTestCase):
    def test_csv_text(self):
        text = csv_text(("u", "v"), [(0.1, 1.0), ("x", np.float64(2.5))])
        self.assertEqual(text, "u,v\n0.1,1.0\nx,2.5\n")
        self.assertEqual(seventeen_digits(0.1), "0.10000000000000001")

    def test_json_text_handles_numpy(self):
        text = json_text({"a": np.float64(0.5), "b": np.arange(2)})
        self.assertTrue(text.endswith("}\n"))
        self.assertEqual(json.loads(text), {"a": 0.5, "b": [0, 1]})


class FormTests(SimpleTestCase):
    def test_fit_form_families(self):
        base = {"input": str(airquality_path()), "xcol": "Wind", "ycol": "Ozone"}
        form = FitForm({**base, "families": "gamma, Weibull"})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual([f.value for f in form.cleaned_data["families"]], ["gamma", "weibull"])
        self.assertFalse(FitForm({**base, "families": "gamma"}).is_valid())
        self.assertFalse(FitForm({**base, "families": "gamma,baseline_y"}).is_valid())
        self.assertFalse(FitForm({**base, "bootstrap": 50}).is_valid())

    def test_run_config_is_plain(self):
        form = SampleForm({"theta": 2, "n": 3, "seed": 7, "marginal_x": "exponential:rate=1",
                           "marginal_y": "gamma:shape=2,scale=1"})
        self.assertTrue(form.is_valid(), form.errors)
        config = form.run_config()
        self.assertEqual(config["command"], "sample")
        self.assertEqual(config["theta"], 2.0)
        self.assertEqual(config["marginal_y"], "gamma(shape=2, scale=1)")
        json.dumps(config)

    def test_marginals_come_in_pairs(self):
        form = SampleForm({"theta": 2, "n": 3, "marginal_x": "exponential:rate=1"})
        self.assertFalse(form.is_valid())


class MeasuresCommandTests(SimpleTestCase):
    def test_single_theta(self):
        payload = json.loads(run("measures", theta=1.0))
        self.assertAlmostEqual(payload["rho"], -2.0 / 3.0, places=15)
        self.assertAlmostEqual(payload["tau"], -0.5, places=15)
        self.assertEqual(payload["config"]["command"], "measures")
        schema = json.loads((SCHEMA_DIR / "measures.schema.json").read_text())
        self.assertTrue(set(schema["required"]) <= set(payload))
        self.assertTrue(-1.0 < payload["tau"] < 0.0)

    def test_grid(self):
        rows = read_csv(run("measures", grid=5, theta_max=5.0))
        np.testing.assert_allclose(rows[:, 0], [1.0, 2.0, 3.0, 4.0, 5.0])
        self.assertTrue(np.all(rows[:, 1] < rows[:, 2]))

    def test_needs_exactly_one_mode(self):
        for options in ({}, {"theta": 1.0, "grid": 3}):
            with self.subTest(options=options), self.assertRaises(CommandError) as ctx:
                run("measures", **options)
            self.assertEqual(ctx.exception.returncode, 2)

    def test_invalid_theta(self):
        for theta in (-1.0, 0.0, 1e9):
            with self.subTest(theta=theta), self.assertRaises(CommandError) as ctx:
                run("measures", theta=theta)
            self.assertEqual(ctx.exception.returncode, 2)


class SampleCommandTests(TempDirMixin, SimpleTestCase):
    def test_same_seed_same_bytes(self):
        first = run("sample", theta=0.765, n=200, seed=42)
        self.assertEqual(first, run("sample", theta=0.765, n=200, seed=42))
        self.assertNotEqual(first, run("sample", theta=0.765, n=200, seed=43))
        lines = first.splitlines()
        self.assertEqual(lines[0], "u,v")
        self.assertEqual(len(lines), 201)

    def test_larger_theta_is_more_negative(self):
        weak = read_csv(run("sample", theta=0.1, n=2000, seed=1))
        strong = read_csv(run("sample", theta=10.0, n=2000, seed=1))
        rho_weak = stats.spearmanr(weak[:, 0], weak[:, 1]).statistic
        rho_strong = stats.spearmanr(strong[:, 0], strong[:, 1]).statistic
        self.assertLess(rho_strong, rho_weak)
        self.assertLess(rho_strong, -0.8)

    def test_with_marginals_to_file(self):
        path = self.tmp / "xy.csv"
        out = run(
            "sample", theta=0.765, n=50, seed=3, output=str(path),
            marginal_x="gamma:shape=7.171,scale=1.375", marginal_y="gamma:shape=1.7,scale=24.775",
        )
        self.assertEqual(out, "")
        text = path.read_text()
        self.assertTrue(text.startswith("x,y\n"))
        self.assertTrue(np.all(read_csv(text) > 0))

    def test_rejects_bad_arguments(self):
        for options in ({"theta": -1.0, "n": 10}, {"theta": 1.0, "n": 0}, {"theta": 1.0, "n": 5, "method": "gibbs"},
                        {"theta": 1.0, "n": 5, "marginal_x": "gamma:shape=1,scale=1"}):
            with self.subTest(options=options), self.assertRaises(CommandError) as ctx:
                run("sample", **options)
            self.assertEqual(ctx.exception.returncode, 2)


class AuditCommandTests(SimpleTestCase):
    def test_passing_run(self):
        payload = json.loads(run("audit", theta=1.0, theta1=0.5, theta2=1.0, resolution=30, n_random=300))
        self.assertTrue(payload["passed"])
        self.assertEqual(len(payload["reports"]), 13)
        self.assertEqual(payload["reports"][-1]["theta"], [0.5, 1.0])
        self.assertTrue(all(r["pass"] for r in payload["reports"]))
        self.assertEqual(payload["rng"]["seed"], payload["config"]["seed"])
        schema = json.loads((SCHEMA_DIR / "audit_report.schema.json").read_text())
        self.assertTrue(set(schema["required"]) <= set(payload))
        report_keys = set(schema["properties"]["reports"]["items"]["required"])
        for report in payload["reports"]:
            self.assertTrue(report_keys <= set(report), report["check_name"])
        self.assertTrue(set(schema["properties"]["rng"]["required"]) <= set(payload["rng"]))

    def test_failure_exits_one(self):
        failing = [AuditReport("nqd", 1.0, "grid", 1.0, 1e-12)]
        out = io.StringIO()
        with mock.patch("core.management.commands.audit.run_standard_suite", return_value=failing):
            with self.assertRaises(CommandError) as ctx:
                call_command("audit", theta=1.0, stdout=out)
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn("1 of 1 audits failed", str(ctx.exception))
        self.assertFalse(json.loads(out.getvalue())["passed"])

    def test_bad_parameters(self):
        for options in ({"theta": 1e9}, {"theta1": 2.0, "theta2": 1.0}, {"theta1": 1.0}):
            with self.subTest(options=options), self.assertRaises(CommandError) as ctx:
                run("audit", **options)
            self.assertEqual(ctx.exception.returncode, 2)


class PlotDataCommandTests(TempDirMixin, SimpleTestCase):
    def test_cdf_grid(self):
        rows = read_csv(run("plotdata", what="cdf", theta=1.0, grid=101))
        self.assertEqual(rows.shape, (101 * 101, 3))
        self.assertTrue(np.all((rows[:, 2] >= 0) & (rows[:, 2] <= 1)))
        centre = rows[(rows[:, 0] == 0.5) & (rows[:, 1] == 0.5), 2]
        self.assertAlmostEqual(centre[0], 0.125, places=15)

    def test_grid_needs_two_points(self):
        with self.assertRaises(CommandError) as ctx:
            run("plotdata", what="pdf", theta=1.0, grid=1)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_surface_needs_theta(self):
        with self.assertRaises(CommandError) as ctx:
            run("plotdata", what="survival")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_conditional_curves_are_ordered(self):
        rows = read_csv(run(
            "plotdata", what="cond", theta=0.765, at="5.7,9.7,14.9", grid=50,
            marginal_x="gamma:shape=7.171,scale=1.375", marginal_y="gamma:shape=1.7,scale=24.775",
        ))
        curves = [rows[rows[:, 2] == x, 1] for x in (5.7, 9.7, 14.9)]
        self.assertTrue(all(len(c) == 50 for c in curves))
        self.assertTrue(np.all(curves[0] <= curves[1] + 1e-15))
        self.assertTrue(np.all(curves[1] <= curves[2] + 1e-15))

    def test_scatter_and_measures(self):
        self.assertEqual(read_csv(run("plotdata", what="scatter", theta=2.0, n=30)).shape, (30, 2))
        self.assertEqual(read_csv(run("plotdata", what="measures", grid=10)).shape, (10, 3))


class FitCommandTests(TempDirMixin, SimpleTestCase):
    def fit(self, path, xcol="a", ycol="b", **options):
        return run("fit", input=str(path), xcol=xcol, ycol=ycol, bootstrap=100, seed=42, **options)

    def test_airquality_report(self):
        report_path = self.tmp / "fit.json"
        self.fit(airquality_path(), "Wind", "Ozone", at="5.7,14.9", output=str(report_path))
        payload = json.loads(report_path.read_text())
        schema = json.loads((SCHEMA_DIR / "fit_report.schema.json").read_text())
        self.assertTrue(set(schema["required"]) <= set(payload))
        self.assertEqual(payload["dropped_rows"], 37)
        self.assertAlmostEqual(payload["theta_hat"], 0.765, delta=0.005)
        self.assertEqual(payload["ks"]["x"]["B"], 100)
        self.assertEqual(payload["config"]["command"], "fit")
        self.assertEqual(len(payload["conditional_curves"]), 2)

        model = read_fit_report(report_path)
        self.assertAlmostEqual(model.theta.theta, payload["theta_hat"])
        rows = read_csv(run("plotdata", what="joint", report=str(report_path), grid=11))
        self.assertEqual(rows.shape, (121, 3))
        self.assertTrue(np.all(np.diff(rows[rows[:, 0] == rows[-1, 0], 2]) >= 0))

    def test_missing_column(self):
        with self.assertRaises(CommandError) as ctx:
            self.fit(airquality_path(), "Wind", "NO2")
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("Ozone", str(ctx.exception))

    def test_too_few_rows(self):
        path = self.write("short.csv", "a,b\n1,2\n2,1\n")
        with self.assertRaises(CommandError) as ctx:
            self.fit(path)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_positive_dependence_exits_three(self):
        rows = "\n".join(f"{i},{2 * i + 1}" for i in range(1, 31))
        path = self.write("pos.csv", f"a,b\n{rows}\n")
        with self.assertRaises(CommandError) as ctx:
            self.fit(path)
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertIn("not negative", str(ctx.exception))

    def test_missing_input_file(self):
        with self.assertRaises(CommandError) as ctx:
            self.fit(self.tmp / "absent.csv")
        self.assertEqual(ctx.exception.returncode, 2)

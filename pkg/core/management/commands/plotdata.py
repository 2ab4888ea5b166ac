"""Long-format CSV grids behind the copula, fitted-model and conditional-curve plots."""
import numpy as np

from bivariate.composition import BivariateModel, conditional_curves, joint_cdf
from copula import core
from copula.sampler import sample_copula
from core.forms import PlotDataForm
from core.ingest import read_fit_report
from core.management.base import Output, RunCommand
from core.output import csv_text

SURFACES = {"cdf": core.cdf, "pdf": core.pdf, "survival": core.survival_copula}

# quantile level bounding the x and y axes of fitted-model grids
UPPER_LEVEL = 0.999


class Command(RunCommand):
    help = "Emit plot data as CSV: copula surfaces, samples, measure curves, fitted joint CDF, conditional CDFs."
    form_class = PlotDataForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--what", required=True, help="cdf, pdf, survival, cond, joint, scatter or measures")
        parser.add_argument("--theta", type=float)
        parser.add_argument("--grid", type=int, help="points per axis (default 101, at least 2)")
        parser.add_argument("--at", help="comma-separated conditioning x values for --what cond")
        parser.add_argument("--report", help="fit report JSON supplying the fitted model")
        parser.add_argument("--marginal-x", help="marginal of X when no report is given")
        parser.add_argument("--marginal-y", help="marginal of Y when no report is given")
        parser.add_argument("--n", type=int, help="points for --what scatter (default 500)")
        parser.add_argument("--theta-max", type=float, help="largest theta for --what measures (default 10)")

    def run(self, config, run_config, options):
        what = config["what"]
        if what in SURFACES:
            return Output(self.surface(SURFACES[what], config["theta"], config["grid"]))
        if what == "scatter":
            batch = sample_copula(config["n"], config["theta"], config["seed"])
            return Output(csv_text(("u", "v"), zip(batch.u, batch.v)))
        if what == "measures":
            curve = core.dependence_curve(config["theta_max"].theta, config["grid"])
            return Output(csv_text(("theta", "rho", "tau"), ((m.theta, m.rho, m.tau) for m in curve)))
        model = self.model(config)
        if what == "joint":
            return Output(self.joint(model, config["grid"]))
        rows = []
        for curve in conditional_curves(model, config["at"], n_points=config["grid"], upper_level=UPPER_LEVEL):
            rows.extend((y, p, curve["x"]) for y, p in zip(curve["y"], curve["cdf"]))
        return Output(csv_text(("y", "cdf", "conditioning_x"), rows))

    @staticmethod
    def model(config):
        if config["report"] is not None:
            return read_fit_report(config["report"])
        return BivariateModel(config["marginal_x"], config["marginal_y"], config["theta"])

    @staticmethod
    def surface(function, theta, grid):
        g = np.linspace(0.0, 1.0, grid)
        u, v = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
        return csv_text(("u", "v", "value"), zip(u, v, function(u, v, theta)))

    @staticmethod
    def joint(model, grid):
        xs = np.linspace(0.0, model.margin_x.quantile(UPPER_LEVEL), grid)
        ys = np.linspace(0.0, model.margin_y.quantile(UPPER_LEVEL), grid)
        x, y = (a.ravel() for a in np.meshgrid(xs, ys, indexing="ij"))
        return csv_text(("x", "y", "value"), zip(x, y, joint_cdf(model, x, y)))

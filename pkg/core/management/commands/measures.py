from dataclasses import asdict

from copula.core import dependence_curve, dependence_measures
from core.forms import MeasuresForm
from core.management.base import Output, RunCommand
from core.output import csv_text, json_text
from estimation.serializers import MeasuresSerializer


class Command(RunCommand):
    help = "Spearman's rho and Kendall's tau of C_theta, for one theta (JSON) or a theta grid (CSV)."
    form_class = MeasuresForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--theta", type=float)
        parser.add_argument("--grid", type=int, help="number of evenly spaced theta values in (0, theta-max]")
        parser.add_argument("--theta-max", type=float, help="largest theta of the grid (default 10)")

    def run(self, config, run_config, options):
        if config["theta"] is not None:
            payload = {**asdict(dependence_measures(config["theta"])), "config": run_config}
            return Output(json_text(MeasuresSerializer(payload).data))
        curve = dependence_curve(config["theta_max"].theta, config["grid"])
        return Output(csv_text(("theta", "rho", "tau"), ((m.theta, m.rho, m.tau) for m in curve)))

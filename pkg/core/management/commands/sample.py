import logging

from bivariate.composition import BivariateModel
from copula.sampler import sample_bivariate, sample_copula
from core.forms import SampleForm
from core.management.base import Output, RunCommand
from core.output import csv_text, seventeen_digits

logger = logging.getLogger(__name__)


class Command(RunCommand):
    help = "Draw n pairs from C_theta (or from a bivariate model) as CSV."
    form_class = SampleForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--theta", type=float, required=True)
        parser.add_argument("--n", type=int, required=True, help="number of pairs")
        parser.add_argument("--method", help="u_given_v (default) or v_given_u")
        parser.add_argument("--marginal-x", help="e.g. gamma:shape=7.171,scale=1.375")
        parser.add_argument("--marginal-y", help="e.g. gamma:shape=1.7,scale=24.775")

    def run(self, config, run_config, options):
        logger.info(f"sample config: {run_config}")
        theta, n, seed, method = config["theta"], config["n"], config["seed"], config["method"]
        if config["marginal_x"] is not None:
            model = BivariateModel(config["marginal_x"], config["marginal_y"], theta)
            draws = sample_bivariate(n, model, seed, method=method)
            return Output(csv_text(("x", "y"), zip(draws.x, draws.y), fmt=seventeen_digits))
        batch = sample_copula(n, theta, seed, method=method)
        return Output(csv_text(("u", "v"), zip(batch.u, batch.v), fmt=seventeen_digits))

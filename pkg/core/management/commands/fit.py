from dataclasses import replace

from core.forms import FitForm
from core.ingest import read_paired_csv
from core.management.base import Output, RunCommand
from core.output import json_text
from estimation.pipeline import PipelineConfig, fit_pipeline
from estimation.serializers import FitReportSerializer


class Command(RunCommand):
    help = "Fit margins and theta to two CSV columns and print the JSON fit report."
    form_class = FitForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--input", required=True, help="CSV file with a header row")
        parser.add_argument("--xcol", required=True, help="column used as X (conditioning variable)")
        parser.add_argument("--ycol", required=True, help="column used as Y")
        parser.add_argument("--bootstrap", type=int, help="KS bootstrap replicates (>= 100)")
        parser.add_argument("--families", help="comma-separated candidate marginal families")
        parser.add_argument("--method", help="rho_inversion (default) or tau_inversion")
        parser.add_argument("--at", help="comma-separated x values for conditional CDF curves of Y")
        parser.add_argument("--workers", type=int, help="bootstrap threads (default: NEGACOPULA_WORKERS)")

    def run(self, config, run_config, options):
        data = read_paired_csv(config["input"], config["xcol"], config["ycol"])
        pipeline = PipelineConfig(
            families=config["families"],
            method=config["method"],
            bootstrap=config["bootstrap"],
            seed=config["seed"],
            workers=config["workers"],
            conditioning=config["at"],
            progress=options.get("verbosity", 1) >= 2,
        )
        report = replace(fit_pipeline(data, pipeline), config=run_config)
        return Output(json_text(FitReportSerializer(report).data))

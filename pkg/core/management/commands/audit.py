from django.conf import settings

from audit.checks import run_standard_suite
from copula.sampler import rng_info
from core.forms import AuditForm
from core.management.base import Output, RunCommand
from core.output import json_text
from estimation.serializers import AuditRunSerializer


def standard_jobs():
    """Every NEGACOPULA_AUDIT_THETAS value, then each consecutive pair of them."""
    thetas = sorted(getattr(settings, "NEGACOPULA_AUDIT_THETAS", (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)))
    return [(t, None) for t in thetas] + [(None, pair) for pair in zip(thetas, thetas[1:])]


class Command(RunCommand):
    help = (
        "Run the dependence audit suite for --theta and/or --theta1/--theta2 "
        "(the standard theta set when neither is given); exit 1 if any check fails."
    )
    form_class = AuditForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--theta", type=float, help="audit the copula axioms and dependence notions")
        parser.add_argument("--theta1", type=float, help="smaller theta of the ordering audits")
        parser.add_argument("--theta2", type=float, help="larger theta of the ordering audits")
        parser.add_argument("--resolution", type=int, help="grid points per axis (default 200)")
        parser.add_argument("--n-random", type=int, help="random rectangles / quadruples (default 10000)")
        parser.add_argument("--workers", type=int, help="checks run in parallel (default: NEGACOPULA_WORKERS)")

    def run(self, config, run_config, options):
        pair = None if config["theta1"] is None else (config["theta1"], config["theta2"])
        jobs = [(config["theta"], pair)] if config["theta"] is not None or pair else standard_jobs()
        reports = []
        for theta, theta_pair in jobs:
            reports += run_standard_suite(
                theta, theta_pair,
                resolution=config["resolution"], n_random=config["n_random"],
                seed=config["seed"], workers=config["workers"],
            )
        failed = [f"{r.check_name}({r.theta})" for r in reports if not r.passed]
        payload = {
            "passed": not failed,
            "reports": reports,
            "config": run_config,
            "rng": rng_info(config["seed"]),
        }
        failure = f"{len(failed)} of {len(reports)} audits failed: {', '.join(failed)}" if failed else None
        return Output(json_text(AuditRunSerializer(payload).data), failure)

import logging
from typing import NamedTuple

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import NegaCopulaError
from core.output import write_text

logger = logging.getLogger(__name__)

# exit codes: 0 success, 1 audit failure, 2 usage or data error, 3 positive dependence
USAGE_ERROR = 2
AUDIT_FAILURE = 1


class Output(NamedTuple):
    text: str
    failure: str = None


def _form_errors(form):
    messages = []
    for field, errors in form.errors.items():
        prefix = "" if field == "__all__" else f"--{field.replace('_', '-')}: "
        messages.extend(f"{prefix}{error}" for error in errors)
    return "; ".join(messages)


class RunCommand(BaseCommand):
    """Validate options through ``form_class``, run, and write the output.

    Subclasses implement ``run(config, run_config, options)`` returning an
    ``Output``. Domain errors become CommandError with their exit code.
    """

    form_class = None

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, help="64-bit seed (default: NEGACOPULA_SEED)")
        parser.add_argument("--output", "-o", help="write to this file instead of stdout")

    def handle(self, *args, **options):
        fields = self.form_class.base_fields
        form = self.form_class({name: options[name] for name in fields if options.get(name) is not None})
        if not form.is_valid():
            raise CommandError(_form_errors(form), returncode=USAGE_ERROR)
        config = form.cleaned_data
        try:
            result = self.run(config, form.run_config(), options)
        except NegaCopulaError as exc:
            logger.error(f"{form.command} failed: {exc}")
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        write_text(result.text, config.get("output"), self.stdout)
        if result.failure:
            raise CommandError(result.failure, returncode=AUDIT_FAILURE)

    def run(self, config, run_config, options):
        raise NotImplementedError

"""
Argument validation for the batch commands.

Each command binds its parsed options to one of these forms; the cleaned
data is the resolved run configuration and ``run_config()`` is the JSON
safe copy embedded in every report.
"""
from enum import Enum
from pathlib import Path

from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from copula.core import DependenceParam, as_theta
from copula.sampler import SAMPLING_METHODS
from core.exceptions import DomainError
from estimation.ranks import ESTIMATION_METHODS
from marginals.distributions import Family, MarginalModel, parse_marginal

MAX_SEED = 2**64 - 1


def _choices(values):
    return [(v, v) for v in values]


def _theta(value):
    try:
        return as_theta(value)
    except DomainError as exc:
        raise ValidationError(str(exc)) from None


def _float_list(text, name):
    values = []
    for item in filter(None, (s.strip() for s in str(text).split(","))):
        try:
            values.append(float(item))
        except ValueError:
            raise ValidationError(f"{name}: {item!r} is not a number") from None
    return tuple(values)


def _marginal(text):
    try:
        return parse_marginal(text)
    except DomainError as exc:
        raise ValidationError(str(exc)) from None


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, DependenceParam):
        return value.theta
    if isinstance(value, (MarginalModel, Path)):
        return str(value)
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


class RunForm(forms.Form):
    command = None

    seed = forms.IntegerField(required=False, min_value=0, max_value=MAX_SEED)
    output = forms.CharField(required=False)

    def clean_seed(self):
        seed = self.cleaned_data.get("seed")
        if seed is None:
            seed = getattr(settings, "NEGACOPULA_DEFAULT_SEED", 0)
        return seed

    def run_config(self):
        config = {"command": self.command}
        config.update({name: _plain(value) for name, value in self.cleaned_data.items()})
        return config


class FitForm(RunForm):
    command = "fit"

    input = forms.CharField()
    xcol = forms.CharField()
    ycol = forms.CharField()
    bootstrap = forms.IntegerField(required=False, min_value=100)
    families = forms.CharField(required=False)
    method = forms.ChoiceField(required=False, choices=_choices(ESTIMATION_METHODS))
    at = forms.CharField(required=False)
    workers = forms.IntegerField(required=False, min_value=1)

    def clean_input(self):
        path = Path(self.cleaned_data["input"])
        if not path.is_file():
            raise ValidationError(f"input file {path} does not exist")
        return path

    def clean_bootstrap(self):
        return self.cleaned_data.get("bootstrap") or getattr(settings, "NEGACOPULA_DEFAULT_BOOTSTRAP", 10000)

    def clean_families(self):
        text = self.cleaned_data.get("families")
        if not text:
            names = getattr(settings, "NEGACOPULA_DEFAULT_FAMILIES", ("lognormal", "weibull", "gamma"))
        else:
            names = [s.strip() for s in text.split(",") if s.strip()]
        try:
            families = tuple(dict.fromkeys(Family.parse(name) for name in names))
        except DomainError as exc:
            raise ValidationError(str(exc)) from None
        if Family.BASELINE_Y in families:
            raise ValidationError("baseline_y cannot be fitted")
        if len(families) < 2:
            raise ValidationError("AIC selection needs at least two candidate families")
        return families

    def clean_method(self):
        return self.cleaned_data.get("method") or "rho_inversion"

    def clean_at(self):
        values = _float_list(self.cleaned_data.get("at") or "", "at")
        if any(v < 0 for v in values):
            raise ValidationError("conditioning values must be non-negative")
        return values

    def clean_workers(self):
        return self.cleaned_data.get("workers") or getattr(settings, "NEGACOPULA_WORKERS", 1)


class MarginalsMixin(forms.Form):
    marginal_x = forms.CharField(required=False)
    marginal_y = forms.CharField(required=False)

    def clean_marginal_x(self):
        text = self.cleaned_data.get("marginal_x")
        return _marginal(text) if text else None

    def clean_marginal_y(self):
        text = self.cleaned_data.get("marginal_y")
        return _marginal(text) if text else None

    def clean(self):
        cleaned = super().clean()
        if (cleaned.get("marginal_x") is None) != (cleaned.get("marginal_y") is None):
            raise ValidationError("give both --marginal-x and --marginal-y, or neither")
        return cleaned


class SampleForm(MarginalsMixin, RunForm):
    command = "sample"

    theta = forms.FloatField()
    n = forms.IntegerField(min_value=1)
    method = forms.ChoiceField(required=False, choices=_choices(SAMPLING_METHODS))

    def clean_theta(self):
        return _theta(self.cleaned_data["theta"])

    def clean_method(self):
        return self.cleaned_data.get("method") or "u_given_v"


class MeasuresForm(RunForm):
    command = "measures"

    theta = forms.FloatField(required=False)
    grid = forms.IntegerField(required=False, min_value=1)
    theta_max = forms.FloatField(required=False)

    def clean_theta(self):
        theta = self.cleaned_data.get("theta")
        return None if theta is None else _theta(theta)

    def clean_theta_max(self):
        theta_max = self.cleaned_data.get("theta_max")
        return _theta(10.0 if theta_max is None else theta_max)

    def clean(self):
        cleaned = super().clean()
        if self.errors:
            return cleaned
        if (cleaned.get("theta") is None) == (cleaned.get("grid") is None):
            raise ValidationError("give exactly one of --theta or --grid")
        return cleaned


class AuditForm(RunForm):
    command = "audit"

    theta = forms.FloatField(required=False)
    theta1 = forms.FloatField(required=False)
    theta2 = forms.FloatField(required=False)
    resolution = forms.IntegerField(required=False, min_value=5)
    n_random = forms.IntegerField(required=False, min_value=1)
    workers = forms.IntegerField(required=False, min_value=1)

    def _optional_theta(self, name):
        value = self.cleaned_data.get(name)
        return None if value is None else _theta(value)

    def clean_theta(self):
        return self._optional_theta("theta")

    def clean_theta1(self):
        return self._optional_theta("theta1")

    def clean_theta2(self):
        return self._optional_theta("theta2")

    def clean_resolution(self):
        return self.cleaned_data.get("resolution") or 200

    def clean_n_random(self):
        return self.cleaned_data.get("n_random") or 10000

    def clean_workers(self):
        return self.cleaned_data.get("workers") or getattr(settings, "NEGACOPULA_WORKERS", 1)

    def clean(self):
        cleaned = super().clean()
        if self.errors:
            return cleaned
        t1, t2 = cleaned.get("theta1"), cleaned.get("theta2")
        if (t1 is None) != (t2 is None):
            raise ValidationError("give both --theta1 and --theta2, or neither")
        if t1 is not None and t1.theta > t2.theta:
            raise ValidationError("--theta1 must not exceed --theta2")
        return cleaned


PLOT_KINDS = ("cdf", "pdf", "survival", "cond", "joint", "scatter", "measures")


class PlotDataForm(MarginalsMixin, RunForm):
    command = "plotdata"

    what = forms.ChoiceField(choices=_choices(PLOT_KINDS))
    theta = forms.FloatField(required=False)
    grid = forms.IntegerField(required=False, min_value=2)
    at = forms.CharField(required=False)
    report = forms.CharField(required=False)
    n = forms.IntegerField(required=False, min_value=1)
    theta_max = forms.FloatField(required=False)

    def clean_theta(self):
        theta = self.cleaned_data.get("theta")
        return None if theta is None else _theta(theta)

    def clean_grid(self):
        return self.cleaned_data.get("grid") or 101

    def clean_at(self):
        values = _float_list(self.cleaned_data.get("at") or "", "at")
        if any(v < 0 for v in values):
            raise ValidationError("conditioning values must be non-negative")
        return values

    def clean_report(self):
        text = self.cleaned_data.get("report")
        if not text:
            return None
        path = Path(text)
        if not path.is_file():
            raise ValidationError(f"report file {path} does not exist")
        return path

    def clean_n(self):
        return self.cleaned_data.get("n") or 500

    def clean_theta_max(self):
        theta_max = self.cleaned_data.get("theta_max")
        return _theta(10.0 if theta_max is None else theta_max)

    def clean(self):
        cleaned = super().clean()
        if self.errors:
            return cleaned
        what = cleaned["what"]
        has_theta = cleaned.get("theta") is not None
        if what in ("cdf", "pdf", "survival", "scatter") and not has_theta:
            raise ValidationError(f"--what {what} needs --theta")
        if what in ("cond", "joint"):
            explicit = has_theta and cleaned.get("marginal_x") is not None
            if cleaned.get("report") is None and not explicit:
                raise ValidationError(
                    f"--what {what} needs --report from fit, or --theta with --marginal-x and --marginal-y"
                )
        if what == "cond" and not cleaned.get("at"):
            raise ValidationError("--what cond needs --at")
        return cleaned

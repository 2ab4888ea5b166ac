import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import stats

from core.exceptions import DomainError

logger = logging.getLogger(__name__)


class Family(str, Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    GAMMA = "gamma"
    LOGNORMAL = "lognormal"
    BASELINE_Y = "baseline_y"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(f.value for f in cls)
            raise DomainError(f"unknown marginal family {value!r}; choose from {choices}") from None


# parameter order per family; Gamma is shape/scale, Weibull is rate/shape
PARAMETER_NAMES = {
    Family.EXPONENTIAL: ("rate",),
    Family.WEIBULL: ("rate", "shape"),
    Family.GAMMA: ("shape", "scale"),
    Family.LOGNORMAL: ("meanlog", "sdlog"),
    Family.BASELINE_Y: ("lam", "mu"),
}

# parameters allowed to take any real value
_UNBOUNDED = {"meanlog"}


@dataclass(frozen=True)
class MarginalModel:
    """A univariate family with its parameters, on the positive half-line."""

    family: Family
    params: tuple

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        names = PARAMETER_NAMES[family]
        params = tuple(float(p) for p in self.params)
        if len(params) != len(names):
            raise DomainError(f"{family.value} takes parameters {names}, got {len(params)} values")
        for name, value in zip(names, params):
            if not math.isfinite(value):
                raise DomainError(f"{family.value} parameter {name} must be finite, got {value!r}")
            if name not in _UNBOUNDED and value <= 0:
                raise DomainError(f"{family.value} parameter {name} must be positive, got {value!r}")
        object.__setattr__(self, "params", params)

    @classmethod
    def of(cls, family, **params):
        family = Family.parse(family)
        names = PARAMETER_NAMES[family]
        missing = set(names) - set(params)
        extra = set(params) - set(names)
        if missing or extra:
            raise DomainError(
                f"{family.value} takes parameters {names}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        return cls(family, tuple(params[name] for name in names))

    @property
    def param_dict(self):
        return dict(zip(PARAMETER_NAMES[self.family], self.params))

    @property
    def k(self):
        """Number of free parameters (for AIC)."""
        return len(self.params)

    def __str__(self):
        args = ", ".join(f"{k}={v:.6g}" for k, v in self.param_dict.items())
        return f"{self.family.value}({args})"

    @cached_property
    def frozen(self):
        """The equivalent scipy.stats frozen distribution (not for baseline_y)."""
        p = self.param_dict
        if self.family is Family.EXPONENTIAL:
            return stats.expon(scale=1.0 / p["rate"])
        if self.family is Family.WEIBULL:
            return stats.weibull_min(c=p["shape"], scale=1.0 / p["rate"])
        if self.family is Family.GAMMA:
            return stats.gamma(a=p["shape"], scale=p["scale"])
        if self.family is Family.LOGNORMAL:
            return stats.lognorm(s=p["sdlog"], scale=math.exp(p["meanlog"]))
        raise DomainError("baseline_y has no scipy.stats equivalent")

    # ---------------------
    # Evaluation
    # ---------------------
    def _support(self, x, allow_inf=False):
        arr = np.asarray(x, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0.0):
            raise DomainError(f"{self.family.value} is supported on x >= 0; got values outside it")
        if not allow_inf and np.any(np.isinf(arr)):
            raise DomainError(f"{self.family.value} density needs finite x")
        return arr

    def _out(self, arr, x):
        return float(arr) if np.ndim(x) == 0 else np.asarray(arr, dtype=float)

    def cdf(self, x):
        arr = self._support(x, allow_inf=True)
        if self.family is Family.BASELINE_Y:
            out = _baseline_cdf(arr, *self.params)
        else:
            out = self.frozen.cdf(arr)
        return self._out(out, x)

    def sf(self, x):
        arr = self._support(x, allow_inf=True)
        if self.family is Family.BASELINE_Y:
            out = 1.0 - _baseline_cdf(arr, *self.params)
        else:
            out = self.frozen.sf(arr)
        return self._out(out, x)

    def pdf(self, x):
        arr = self._support(x)
        if self.family is Family.BASELINE_Y:
            out = np.exp(_baseline_log_pdf(arr, *self.params))
        else:
            out = self.frozen.pdf(arr)
        return self._out(out, x)

    def log_pdf(self, x):
        arr = self._support(x)
        if self.family is Family.BASELINE_Y:
            out = _baseline_log_pdf(arr, *self.params)
        else:
            out = self.frozen.logpdf(arr)
        return self._out(out, x)

    def quantile(self, p):
        arr = np.asarray(p, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("quantile level must lie in [0, 1]")
        if self.family is Family.BASELINE_Y:
            out = _baseline_quantile(arr, *self.params)
        else:
            out = self.frozen.ppf(arr)
        return self._out(out, p)

    def mean(self):
        if self.family is Family.BASELINE_Y:
            lam, mu = self.params
            if mu <= 1:
                return math.inf
            return (mu / (lam + mu)) * lam / (lam + 1) + lam * mu / ((lam + mu) * (mu - 1))
        return float(self.frozen.mean())


# ---------------------
# Baseline Y law: G(y) = mu/(lam+mu) y^lam on (0, 1], 1 - lam/((lam+mu) y^mu) beyond
# ---------------------
def _baseline_cdf(y, lam, mu):
    a = mu / (lam + mu)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(y <= 1.0, a * np.minimum(y, 1.0) ** lam, 1.0 - (1.0 - a) * np.maximum(y, 1.0) ** -mu)


def _baseline_log_pdf(y, lam, mu):
    c = math.log(lam * mu / (lam + mu))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_y = np.log(y)
        return np.where(y <= 1.0, c + (lam - 1.0) * log_y, c - (mu + 1.0) * log_y)


def _baseline_quantile(p, lam, mu):
    a = mu / (lam + mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = (p / a) ** (1.0 / lam)
        high = ((1.0 - a) / (1.0 - p)) ** (1.0 / mu)
        return np.where(p <= a, low, high)


def parse_marginal(text):
    """Parse ``family:name=value,...`` as used on the command line."""
    family, _, rest = str(text).partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        name, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"marginal parameter {item!r} must look like name=value")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise DomainError(f"marginal parameter {name.strip()!r} is not a number: {value!r}") from None
    return MarginalModel.of(family, **params)

"""
Maximum-likelihood fitting of the marginal families and AIC selection.

Exponential and Lognormal have closed-form MLEs. Gamma and Weibull reduce
to a one-dimensional profile equation in the shape, solved by Newton's
method from a method-of-moments start; a step that would leave the
positive half-line is replaced by halving the current iterate.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from core.exceptions import DomainError, FailedConvergence, InsufficientData, NonPositiveData
from marginals.distributions import Family, MarginalModel

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
MAX_ITERATIONS = 100


@dataclass(frozen=True)
class FitResult:
    model: MarginalModel
    log_likelihood: float
    aic: float
    n: int
    iterations: int = 0
    gradient_norm: float = 0.0
    # family -> AIC (None when the family was excluded); filled by select_by_aic
    aic_table: dict = field(default_factory=dict)
    excluded: tuple = ()


def _positive_data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientData(f"maximum likelihood needs at least 2 observations, got {x.size}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        bad = int(np.sum(~np.isfinite(x) | (x <= 0)))
        raise NonPositiveData(f"{bad} observation(s) are not strictly positive and finite")
    return x


def _result(model, x, iterations=0, gradient_norm=0.0):
    ll = float(np.sum(model.log_pdf(x)))
    return FitResult(
        model=model,
        log_likelihood=ll,
        aic=2.0 * model.k - 2.0 * ll,
        n=int(x.size),
        iterations=iterations,
        gradient_norm=float(gradient_norm),
    )


def _newton(fun, start, label):
    """Safeguarded Newton iteration on a scalar shape equation.

    ``fun`` returns (value, derivative). Returns (root, iterations).
    """
    shape = start
    for iteration in range(1, MAX_ITERATIONS + 1):
        value, slope = fun(shape)
        if not (math.isfinite(value) and math.isfinite(slope)) or slope == 0.0:
            raise FailedConvergence(
                f"{label} Newton iteration broke down", last_iterate=shape, gradient_norm=abs(value),
                iterations=iteration,
            )
        proposal = shape - value / slope
        if proposal <= 0.0:
            proposal = shape / 2.0
        delta = proposal - shape
        shape = proposal
        if abs(delta) <= NEWTON_TOL * max(1.0, shape):
            return shape, iteration
    value, _ = fun(shape)
    raise FailedConvergence(
        f"{label} Newton iteration did not converge", last_iterate=shape, gradient_norm=abs(value),
        iterations=MAX_ITERATIONS,
    )


# ---------------------
# Method of moments (Newton starting points)
# ---------------------
def method_of_moments(family, data):
    family = Family.parse(family)
    x = _positive_data(data)
    mean, var = x.mean(), x.var()
    log_sd = np.log(x).std()
    if family is Family.EXPONENTIAL:
        return MarginalModel.of(family, rate=1.0 / mean)
    if var <= 0 or log_sd <= 0:
        raise FailedConvergence(f"{family.value} moments are degenerate for constant data")
    if family is Family.GAMMA:
        shape = mean**2 / var
        return MarginalModel.of(family, shape=shape, scale=mean / shape)
    if family is Family.WEIBULL:
        # Var[log X] = pi^2 / (6 shape^2) for a Weibull law
        shape = math.pi / (math.sqrt(6.0) * log_sd)
        z = x / x.max()
        rate = 1.0 / (x.max() * np.mean(z**shape) ** (1.0 / shape))
        return MarginalModel.of(family, rate=rate, shape=shape)
    if family is Family.LOGNORMAL:
        return MarginalModel.of(family, meanlog=float(np.log(x).mean()), sdlog=float(log_sd))
    raise DomainError(f"no moment estimator for {family.value}")


# ---------------------
# Per-family MLEs
# ---------------------
def _fit_exponential(x):
    return _result(MarginalModel.of(Family.EXPONENTIAL, rate=1.0 / x.mean()), x)


def _fit_lognormal(x):
    lx = np.log(x)
    sd = lx.std()
    if sd <= 0:
        raise FailedConvergence("lognormal MLE is degenerate for constant data", last_iterate=0.0)
    return _result(MarginalModel.of(Family.LOGNORMAL, meanlog=float(lx.mean()), sdlog=float(sd)), x)


def _fit_gamma(x):
    mean = x.mean()
    mean_log = np.log(x).mean()
    s = math.log(mean) - mean_log
    if s <= 0:
        raise FailedConvergence("gamma shape equation has no root for constant data", last_iterate=math.inf)
    start = method_of_moments(Family.GAMMA, x).param_dict["shape"]

    # log(shape) - digamma(shape) = log(mean) - mean(log x)
    def equation(shape):
        return (
            math.log(shape) - special.digamma(shape) - s,
            1.0 / shape - special.polygamma(1, shape),
        )

    shape, iterations = _newton(equation, start, "gamma")
    scale = mean / shape
    n = x.size
    grad_shape = n * (mean_log - math.log(scale) - special.digamma(shape))
    grad_scale = n * (mean / scale**2 - shape / scale)
    model = MarginalModel.of(Family.GAMMA, shape=shape, scale=scale)
    return _result(model, x, iterations, math.hypot(grad_shape, grad_scale))


def _fit_weibull(x):
    lx = np.log(x)
    mean_log = lx.mean()
    # rescale so powers of x stay bounded; the profile equation is scale free
    z = x / x.max()
    start = method_of_moments(Family.WEIBULL, x).param_dict["shape"]

    def equation(shape):
        weights = z**shape
        total = weights.sum()
        m1 = np.dot(weights, lx) / total
        m2 = np.dot(weights, lx**2) / total
        return m1 - 1.0 / shape - mean_log, (m2 - m1**2) + 1.0 / shape**2

    shape, iterations = _newton(equation, start, "weibull")
    rate = 1.0 / (x.max() * np.mean(z**shape) ** (1.0 / shape))
    n = x.size
    scaled = (rate * x) ** shape
    grad_rate = (shape / rate) * (n - scaled.sum())
    grad_shape = n / shape + n * math.log(rate) + lx.sum() - np.dot(scaled, np.log(rate * x))
    model = MarginalModel.of(Family.WEIBULL, rate=rate, shape=shape)
    return _result(model, x, iterations, math.hypot(grad_rate, grad_shape))


_FITTERS = {
    Family.EXPONENTIAL: _fit_exponential,
    Family.LOGNORMAL: _fit_lognormal,
    Family.GAMMA: _fit_gamma,
    Family.WEIBULL: _fit_weibull,
}


def mle_fit(family, data):
    """Maximum-likelihood fit of one family to strictly positive data."""
    family = Family.parse(family)
    if family not in _FITTERS:
        raise DomainError(f"{family.value} is an evaluation oracle only and has no MLE")
    x = _positive_data(data)
    result = _FITTERS[family](x)
    logger.debug(
        f"fitted {result.model} to n={result.n}: loglik={result.log_likelihood:.6f}, "
        f"aic={result.aic:.6f}, iterations={result.iterations}"
    )
    return result


def select_by_aic(data, families):
    """Fit every candidate family and keep the minimum-AIC one.

    Families whose fit fails to converge are excluded with a warning; the
    returned result carries the full AIC table.
    """
    families = [Family.parse(f) for f in families]
    if len(set(families)) < 2:
        raise DomainError("AIC selection needs at least two candidate families")
    table, excluded, fits = {}, [], []
    for family in dict.fromkeys(families):
        try:
            fit = mle_fit(family, data)
        except FailedConvergence as exc:
            logger.warning(f"excluding {family.value} from AIC selection: {exc}")
            table[family.value] = None
            excluded.append(family.value)
            continue
        table[family.value] = fit.aic
        fits.append(fit)
    if not fits:
        raise FailedConvergence("no candidate family converged", iterations=MAX_ITERATIONS)
    best = min(fits, key=lambda f: f.aic)
    logger.info(f"AIC selected {best.model} (aic={best.aic:.4f}) from {sorted(table)}")
    return replace(best, aic_table=table, excluded=tuple(excluded))

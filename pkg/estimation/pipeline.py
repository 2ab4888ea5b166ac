"""
Two-stage fitting of a bivariate C_theta model.

Margins are fitted first (AIC over the candidate families), then theta is
obtained by inverting the empirical rank correlation; the bivariate
likelihood is never maximised. Each stage collects labelled failures and
raises a PipelineError naming the stage.
"""
import logging
from dataclasses import dataclass, field, replace

from django.conf import settings

from bivariate.composition import BivariateModel, conditional_curves
from copula.core import DependenceParam
from copula.sampler import check_seed, rng_info
from core.exceptions import NegaCopulaError, PipelineError
from estimation.goodness import KSResult, ks_test_bootstrap
from estimation.ranks import PairedData, empirical_rho, empirical_tau, estimate_theta
from marginals.fitting import FitResult, select_by_aic

logger = logging.getLogger(__name__)

# bootstrap stream per margin
KS_STREAMS = {"x": 1, "y": 2}


def _default_families():
    return tuple(getattr(settings, "NEGACOPULA_DEFAULT_FAMILIES", ("lognormal", "weibull", "gamma")))


@dataclass(frozen=True)
class PipelineConfig:
    families: tuple = field(default_factory=_default_families)
    method: str = "rho_inversion"
    bootstrap: int = None
    seed: int = None
    workers: int = None
    conditioning: tuple = ()
    curve_points: int = 200
    progress: bool = False

    def resolved(self):
        """Fill unset knobs from settings."""
        return PipelineConfig(
            families=tuple(self.families),
            method=self.method,
            bootstrap=getattr(settings, "NEGACOPULA_DEFAULT_BOOTSTRAP", 10000) if self.bootstrap is None else self.bootstrap,
            seed=check_seed(getattr(settings, "NEGACOPULA_DEFAULT_SEED", 0) if self.seed is None else self.seed),
            workers=self.workers or getattr(settings, "NEGACOPULA_WORKERS", 1),
            conditioning=tuple(float(x) for x in self.conditioning),
            curve_points=self.curve_points,
            progress=self.progress,
        )


@dataclass(frozen=True)
class FitReport:
    marginal_x: FitResult
    marginal_y: FitResult
    rho_emp: float
    tau_emp: float
    theta_hat: DependenceParam
    method: str
    ks_x: KSResult
    ks_y: KSResult
    n: int
    dropped_rows: int
    columns: dict
    rng: dict
    conditional_curves: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def model(self):
        return BivariateModel(self.marginal_x.model, self.marginal_y.model, self.theta_hat)


def _stage(name, tasks):
    """Run labelled callables; collect every domain failure before raising."""
    results, errors = {}, []
    for label, task in tasks:
        try:
            results[label] = task()
        except NegaCopulaError as exc:
            logger.error(f"{name} [{label}]: {exc}")
            errors.append((label, exc))
    if errors:
        raise PipelineError(name, errors)
    return results


def fit_pipeline(data, config=None):
    """Fit margins, theta and bootstrap KS tests; deterministic given the seed."""
    if not isinstance(data, PairedData):
        data = PairedData(*data)
    config = (config or PipelineConfig()).resolved()
    xcol, ycol = data.labels
    lx, ly = f"x ({xcol})", f"y ({ycol})"
    logger.info(f"fitting {xcol}/{ycol} on n={data.n} complete pairs ({data.dropped} dropped)")

    margins = _stage("marginal selection", [
        (lx, lambda: select_by_aic(data.x, config.families)),
        (ly, lambda: select_by_aic(data.y, config.families)),
    ])
    fit_x, fit_y = margins[lx], margins[ly]

    dependence = _stage("dependence", [
        ("rho_emp", lambda: empirical_rho(data)),
        ("tau_emp", lambda: empirical_tau(data)),
        ("theta_hat", lambda: estimate_theta(data, config.method)),
    ])

    def bootstrap(column, fit, axis):
        return ks_test_bootstrap(
            column, fit.model, config.bootstrap, config.seed,
            stream=KS_STREAMS[axis], workers=config.workers, progress=config.progress,
        )

    goodness = _stage("goodness of fit", [
        (lx, lambda: bootstrap(data.x, fit_x, "x")),
        (ly, lambda: bootstrap(data.y, fit_y, "y")),
    ])

    report = FitReport(
        marginal_x=fit_x,
        marginal_y=fit_y,
        rho_emp=dependence["rho_emp"],
        tau_emp=dependence["tau_emp"],
        theta_hat=dependence["theta_hat"],
        method=config.method,
        ks_x=goodness[lx],
        ks_y=goodness[ly],
        n=data.n,
        dropped_rows=data.dropped,
        columns={"x": xcol, "y": ycol},
        rng=rng_info(config.seed),
    )
    if config.conditioning:
        curves = _stage("conditional curves", [
            ("curves", lambda: conditional_curves(report.model, config.conditioning, config.curve_points)),
        ])
        report = replace(report, conditional_curves=curves["curves"])
    logger.info(f"fit complete: {report.model}")
    return report

"""
Bivariate laws built from C_theta and two marginals by Sklar composition:
H(x, y) = C_theta(F(x), G(y)).

The composition is the only production path; the closed-form
densities in ``bivariate.closed_forms`` are reachable through
``joint_pdf(..., closed_form=True)`` for verification.
"""
import logging
from dataclasses import dataclass

import numpy as np

from copula import core
from core.exceptions import DomainError
from marginals.distributions import Family, MarginalModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BivariateModel:
    margin_x: MarginalModel
    margin_y: MarginalModel
    theta: core.DependenceParam

    def __post_init__(self):
        for name in ("margin_x", "margin_y"):
            if not isinstance(getattr(self, name), MarginalModel):
                raise DomainError(f"{name} must be a MarginalModel, got {getattr(self, name)!r}")
        object.__setattr__(self, "theta", core.as_theta(self.theta))

    def __str__(self):
        return f"C_theta(theta={self.theta.theta:.6g}) with X ~ {self.margin_x}, Y ~ {self.margin_y}"


def baseline_model(lam, theta):
    """Exponential(lam) and BaselineY(lam, theta * lam) coupled by C_theta."""
    th = core.as_theta(theta)
    return BivariateModel(
        margin_x=MarginalModel.of(Family.EXPONENTIAL, rate=lam),
        margin_y=MarginalModel.of(Family.BASELINE_Y, lam=lam, mu=th.theta * lam),
        theta=th,
    )


def _shape_out(arr, *args):
    return float(arr) if all(np.ndim(a) == 0 for a in args) else arr


def joint_cdf(model, x, y):
    """H(x, y) = C_theta(F(x), G(y))."""
    out = core.cdf(model.margin_x.cdf(x), model.margin_y.cdf(y), model.theta)
    return _shape_out(out, x, y)


def joint_survival(model, x, y):
    """P[X > x, Y > y] through the survival copula."""
    out = core.survival_copula(model.margin_x.sf(x), model.margin_y.sf(y), model.theta)
    return _shape_out(out, x, y)


def joint_pdf(model, x, y, *, closed_form=False):
    """h(x, y) = c_theta(F(x), G(y)) f(x) g(y)."""
    if closed_form:
        from bivariate.closed_forms import closed_form_pdf

        return closed_form_pdf(model, x, y)
    c = np.asarray(core.pdf(model.margin_x.cdf(x), model.margin_y.cdf(y), model.theta))
    f = np.asarray(model.margin_x.pdf(x))
    g = np.asarray(model.margin_y.pdf(y))
    # zero copula density wins over an unbounded marginal density at the origin
    out = np.where(c > 0.0, c * f * g, 0.0)
    return _shape_out(out, x, y)


def cond_cdf_y_given_x(model, y, x):
    """P[Y <= y | X = x]."""
    out = core.cond_cdf_v_given_u(model.margin_y.cdf(y), model.margin_x.cdf(x), model.theta)
    return _shape_out(out, x, y)


def cond_quantile_y_given_x(model, p, x):
    """Inverse of ``cond_cdf_y_given_x`` in y."""
    v = core.cond_quantile_v_given_u(p, model.margin_x.cdf(x), model.theta)
    return model.margin_y.quantile(v)


def conditional_curves(model, at, n_points=200, upper_level=0.999):
    """CDF curves of Y given X = x for every x in ``at`` on a shared y grid.

    The grid runs from 0 to the ``upper_level`` quantile of Y.
    """
    y_max = float(model.margin_y.quantile(upper_level))
    ys = np.linspace(0.0, y_max, n_points)
    curves = []
    for x in at:
        curves.append({"x": float(x), "y": ys, "cdf": np.asarray(cond_cdf_y_given_x(model, ys, x))})
    logger.debug(f"built {len(curves)} conditional curves on [0, {y_max:.4g}]")
    return curves

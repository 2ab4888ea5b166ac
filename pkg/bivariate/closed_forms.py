"""
Closed-form joint laws used as verification oracles for the composition.

Thresholds are written through the marginal quantiles. The Gamma pair
is parameterised by rate beta = 1 / scale.
"""
import math

import numpy as np
from scipy import special

from copula.core import as_theta
from core.exceptions import DomainError
from marginals.distributions import Family


def baseline_joint_cdf(x, y, lam, mu):
    """H(x, y) of the Exponential(lam) / BaselineY(lam, mu) pair, evaluated directly."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    total = lam + mu
    out = np.zeros(x.shape)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        log_y = np.log(y)
        low = (y <= 1.0) & (x > -log_y)
        high = y > 1.0
        xl, yl = x[low], y[low]
        out[low] = (
            mu / total * yl**lam
            - np.exp(-lam * xl)
            + lam / total * np.exp(-total * xl - mu * log_y[low])
        )
        xh, yh = x[high], y[high]
        out[high] = -np.expm1(-lam * xh) - lam / total * yh**-mu * -np.expm1(-total * xh)
    return float(out) if out.ndim == 0 else out


def weibull_joint_pdf(x, y, rate_x, shape_x, rate_y, shape_y, theta):
    """Joint density of the Weibull pair F = 1 - exp(-(rate x)^shape)."""
    th = as_theta(theta)
    t = th.theta
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    phi_1 = (math.log1p(t)) ** (1.0 / shape_y) / rate_y
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        e_x = np.exp(-((rate_x * x) ** shape_x))
        e_y = np.exp(-((rate_y * y) ** shape_y))
        g_cdf = -np.expm1(-((rate_y * y) ** shape_y))
        phi_2 = np.log(t / ((1.0 + t) * g_cdf)) ** (1.0 / shape_x) / rate_x
        base = (
            shape_x * shape_y * rate_x**shape_x * rate_y**shape_y
            * x ** (shape_x - 1.0) * y ** (shape_y - 1.0)
        )
        lower = (y <= phi_1) & (x > phi_2)
        upper = y > phi_1
        out = np.zeros(x.shape)
        out[lower] = (
            base[lower] * t ** (t + 1.0) / (1.0 + t) ** t
            * (e_x[lower] / g_cdf[lower]) ** (1.0 + t) * e_y[lower]
        )
        out[upper] = base[upper] * (1.0 + t) * e_y[upper] * e_x[upper] ** (1.0 + t)
    return float(out) if out.ndim == 0 else out


def gamma_joint_pdf(x, y, shape_x, rate_x, shape_y, rate_y, theta):
    """Joint density of the Gamma pair with densities beta^alpha x^(alpha-1) e^(-beta x) / Gamma(alpha)."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    xi_2 = special.gammaincinv(shape_y, a) / rate_y
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        p_y = special.gammainc(shape_y, rate_y * y)
        q_x = special.gammaincc(shape_x, rate_x * x)
        xi_1 = special.gammaincinv(shape_x, np.clip(1.0 - p_y / a, 0.0, 1.0)) / rate_x
        log_base = (
            shape_x * math.log(rate_x) + shape_y * math.log(rate_y)
            + (shape_x - 1.0) * np.log(x) + (shape_y - 1.0) * np.log(y)
            - (rate_x * x + rate_y * y)
            - special.gammaln(shape_x) - special.gammaln(shape_y)
        )
        base = np.exp(log_base)
        lower = (y <= xi_2) & (x > xi_1)
        upper = y > xi_2
        out = np.zeros(x.shape)
        out[lower] = (
            base[lower] * t ** (1.0 + t) / (1.0 + t) ** t
            * q_x[lower] ** t * p_y[lower] ** -(1.0 + t)
        )
        out[upper] = base[upper] * (1.0 + t) * q_x[upper] ** t
    return float(out) if out.ndim == 0 else out


def closed_form_pdf(model, x, y):
    """Dispatch a BivariateModel to its closed-form joint density."""
    fx, fy = model.margin_x, model.margin_y
    families = (fx.family, fy.family)
    if families == (Family.WEIBULL, Family.WEIBULL):
        px, py = fx.param_dict, fy.param_dict
        return weibull_joint_pdf(x, y, px["rate"], px["shape"], py["rate"], py["shape"], model.theta)
    if families == (Family.GAMMA, Family.GAMMA):
        px, py = fx.param_dict, fy.param_dict
        return gamma_joint_pdf(
            x, y, px["shape"], 1.0 / px["scale"], py["shape"], 1.0 / py["scale"], model.theta
        )
    if families == (Family.EXPONENTIAL, Family.EXPONENTIAL):
        # the Weibull family with unit shapes
        return weibull_joint_pdf(
            x, y, fx.param_dict["rate"], 1.0, fy.param_dict["rate"], 1.0, model.theta
        )
    raise DomainError(f"no closed-form density for marginals {families[0].value}/{families[1].value}")

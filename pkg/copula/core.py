"""
Closed-form evaluation of the negative-dependence copula C_theta.

With a = theta / (1 + theta) and w = 1 - u the unit square splits into

    Void   v <= a * w          C = 0, no mass
    Lower  a * w < v <= a      C = v - w + w / (1 + theta) * (a * w / v) ** theta
    Upper  v > a               C = u - (1 - v) * (1 - w ** (1 + theta))

Lower-branch expressions are written through the ratio r = a * w / v, which
stays in [0, 1) on the support, so no power can overflow for large theta.
Every function accepts scalars or numpy arrays and returns a float for
scalar input.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from django.conf import settings
from scipy import integrate, optimize

from core.exceptions import DomainError

logger = logging.getLogger(__name__)

# closed forms of the V|U moments have removable singularities at theta = 1, 2
SINGULAR_BAND = 1e-3


def theta_range():
    return getattr(settings, "NEGACOPULA_THETA_RANGE", (1e-8, 1e8))


def boundary_tolerance():
    return getattr(settings, "NEGACOPULA_BOUNDARY_TOL", 1e-14)


# ---------------------
# Domain types
# ---------------------
@dataclass(frozen=True)
class DependenceParam:
    """The single dependence parameter theta > 0."""

    theta: float

    def __post_init__(self):
        try:
            theta = float(self.theta)
        except (TypeError, ValueError):
            raise DomainError(f"theta must be a real number, got {self.theta!r}") from None
        if not math.isfinite(theta) or theta <= 0:
            raise DomainError(f"theta must be positive and finite, got {self.theta!r}")
        lo, hi = theta_range()
        if not lo <= theta <= hi:
            raise DomainError(f"theta={theta:g} is outside the supported range [{lo:g}, {hi:g}]")
        object.__setattr__(self, "theta", theta)

    @property
    def threshold(self):
        """a(theta) = theta / (1 + theta), the Lower/Upper split in v."""
        return self.theta / (1.0 + self.theta)

    def __float__(self):
        return self.theta


def as_theta(theta):
    if isinstance(theta, DependenceParam):
        return theta
    return DependenceParam(theta)


class UnitPoint(NamedTuple):
    u: float
    v: float


class RegionTag(str, Enum):
    VOID = "void"
    LOWER = "lower"
    UPPER = "upper"
    BOUNDARY_LOWER_UPPER = "boundary_lower_upper"
    BOUNDARY_SUPPORT = "boundary_support"


@dataclass(frozen=True)
class DependenceMeasures:
    theta: float
    rho: float
    tau: float


# ---------------------
# Argument helpers
# ---------------------
def _unit(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _open_unit(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"{name} must lie in the open interval (0, 1)")
    return arr


def _result(arr, scalar):
    return float(arr) if scalar else arr


def _is_scalar(*args):
    return all(np.ndim(a) == 0 for a in args)


def region_codes(u, v, theta):
    """Vectorised region index: 0 Void, 1 Lower, 2 Upper (boundaries fold left)."""
    th = as_theta(theta)
    a = th.threshold
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    codes = np.zeros(u.shape, dtype=np.int8)
    codes[v > a * (1.0 - u)] = 1
    codes[v > a] = 2
    return codes


def classify_region(point, theta):
    """Tag the piece of C_theta that ``point`` (a UnitPoint or (u, v)) falls in."""
    u, v = (float(c) for c in point)
    _unit(u, "u")
    _unit(v, "v")
    a = as_theta(theta).threshold
    tol = boundary_tolerance()
    support = a * (1.0 - u)
    if abs(v - support) <= tol:
        return RegionTag.BOUNDARY_SUPPORT
    if abs(v - a) <= tol:
        return RegionTag.BOUNDARY_LOWER_UPPER
    if v < support:
        return RegionTag.VOID
    if v <= a:
        return RegionTag.LOWER
    return RegionTag.UPPER


# ---------------------
# Copula, survival copula, density
# ---------------------
def cdf(u, v, theta):
    """C_theta(u, v), extended by 0 on the Void region."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    scalar = _is_scalar(u, v)
    u, v = np.broadcast_arrays(_unit(u, "u"), _unit(v, "v"))
    w = 1.0 - u
    out = np.zeros(u.shape)
    upper = v > a
    lower = ~upper & (v > a * w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        uu, vu = u[upper], v[upper]
        out[upper] = uu - (1.0 - vu) * -np.expm1((1.0 + t) * np.log1p(-uu))
        wl, vl = w[lower], v[lower]
        r = a * wl / vl
        out[lower] = vl - wl + wl * r**t / (1.0 + t)
    # rounding can leave a few ulps outside the Frechet bounds
    out = np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v))
    return _result(out, scalar)


def survival_copula(u, v, theta):
    """C-hat(u, v) = u + v - 1 + C(1 - u, 1 - v)."""
    scalar = _is_scalar(u, v)
    u, v = np.broadcast_arrays(_unit(u, "u"), _unit(v, "v"))
    out = u + v - 1.0 + np.asarray(cdf(1.0 - u, 1.0 - v, theta))
    out = np.clip(out, 0.0, np.minimum(u, v))
    return _result(out, scalar)


def pdf(u, v, theta):
    """Copula density c_theta(u, v); zero on the Void region."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    scalar = _is_scalar(u, v)
    u, v = np.broadcast_arrays(_unit(u, "u"), _unit(v, "v"))
    w = 1.0 - u
    out = np.zeros(u.shape)
    upper = v > a
    lower = ~upper & (v > a * w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        out[upper] = (1.0 + t) * w[upper] ** t
        vl = v[lower]
        out[lower] = t * (a * w[lower] / vl) ** t / vl
    return _result(out, scalar)


def log_pdf(u, v, theta):
    """log c_theta(u, v); -inf on the Void region."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    scalar = _is_scalar(u, v)
    u, v = np.broadcast_arrays(_unit(u, "u"), _unit(v, "v"))
    w = 1.0 - u
    out = np.full(u.shape, -np.inf)
    upper = v > a
    lower = ~upper & (v > a * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[upper] = math.log1p(t) + t * np.log(w[upper])
        vl = v[lower]
        out[lower] = math.log(t) + t * np.log(a * w[lower] / vl) - np.log(vl)
    return _result(out, scalar)


def laplacian(u, v, theta):
    """Analytic d2C/du2 + d2C/dv2 inside the Lower and Upper regions."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    scalar = _is_scalar(u, v)
    u, v = np.broadcast_arrays(_unit(u, "u"), _unit(v, "v"))
    w = 1.0 - u
    out = np.zeros(u.shape)
    upper = v > a
    lower = ~upper & (v > a * w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out[upper] = t * (1.0 + t) * w[upper] ** (t - 1.0) * (1.0 - v[upper])
        wl, vl = w[lower], v[lower]
        out[lower] = t * (a * wl / vl) ** t * (1.0 / wl + wl / vl**2)
    return _result(out, scalar)


# ---------------------
# Conditional copulas
# ---------------------
def _cdf_u_given_v(u, v, t, a):
    w = 1.0 - u
    out = np.empty(np.broadcast(u, v).shape)
    u, v, w = np.broadcast_arrays(u, v, w)
    upper = v > a
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        out[upper] = -np.expm1((1.0 + t) * np.log1p(-u[upper]))
        r = a * w[~upper] / v[~upper]
        out[~upper] = np.where(r < 1.0, 1.0 - np.minimum(r, 1.0) ** (1.0 + t), 0.0)
    return out


def _quantile_u_given_v(p, v, t, a):
    p, v = np.broadcast_arrays(p, v)
    with np.errstate(divide="ignore", under="ignore"):
        tail = np.exp(np.log1p(-p) / (1.0 + t))
        return np.where(v <= a, 1.0 - (v / a) * tail, 1.0 - tail)


def _cdf_v_given_u(v, u, t, a):
    w = 1.0 - u
    v, u, w = np.broadcast_arrays(v, u, w)
    out = np.zeros(v.shape)
    upper = v > a
    lower = ~upper & (v > a * w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        out[upper] = 1.0 - (1.0 + t) * (1.0 - v[upper]) * w[upper] ** t
        out[lower] = 1.0 - (a * w[lower] / v[lower]) ** t
    return out


def _quantile_v_given_u(p, u, t, a):
    p, u = np.broadcast_arrays(p, u)
    w = 1.0 - u
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        log_w = np.log(w)
        p_star = -np.expm1(t * log_w)
        below = a * w * np.exp(-np.log1p(-p) / t)
        above = 1.0 - (1.0 - p) / ((1.0 + t) * np.exp(t * log_w))
        out = np.where(p < p_star, below, above)
    return np.clip(np.nan_to_num(out, nan=0.0), 0.0, 1.0)


def cond_cdf_u_given_v(u, v, theta):
    """P[U <= u | V = v]."""
    th = as_theta(theta)
    scalar = _is_scalar(u, v)
    out = _cdf_u_given_v(_unit(u, "u"), _unit(v, "v"), th.theta, th.threshold)
    return _result(out, scalar)


def cond_quantile_u_given_v(p, v, theta):
    """Inverse of ``cond_cdf_u_given_v`` in its first argument."""
    th = as_theta(theta)
    scalar = _is_scalar(p, v)
    out = _quantile_u_given_v(_open_unit(p, "p"), _unit(v, "v"), th.theta, th.threshold)
    return _result(out, scalar)


def cond_cdf_v_given_u(v, u, theta):
    """P[V <= v | U = u]."""
    th = as_theta(theta)
    scalar = _is_scalar(u, v)
    out = _cdf_v_given_u(_unit(v, "v"), _unit(u, "u"), th.theta, th.threshold)
    return _result(out, scalar)


def cond_quantile_v_given_u(p, u, theta):
    """Inverse of ``cond_cdf_v_given_u`` in its first argument."""
    th = as_theta(theta)
    scalar = _is_scalar(p, u)
    out = _quantile_v_given_u(_open_unit(p, "p"), _unit(u, "u"), th.theta, th.threshold)
    return _result(out, scalar)


def cond_pdf_u_given_v(u, v, theta):
    # V is uniform, so the conditional density of U is the copula density
    return pdf(u, v, theta)


def cond_pdf_v_given_u(v, u, theta):
    return pdf(u, v, theta)


# ---------------------
# Conditional moments
# ---------------------
def cond_mean_var_u_given_v(v, theta):
    """(E[U | V=v], Var[U | V=v])."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    scalar = _is_scalar(v)
    v = _unit(v, "v")
    lower = v <= a
    mean = np.where(lower, 1.0 - (1.0 + t) ** 2 * v / (t * (t + 2.0)), 1.0 / (t + 2.0))
    var = np.where(
        lower,
        (1.0 + t) ** 3 * v**2 / (t**2 * (t + 2.0) ** 2 * (t + 3.0)),
        (t + 1.0) / ((t + 2.0) ** 2 * (t + 3.0)),
    )
    if scalar:
        return float(mean), float(var)
    return mean, var


def quad_moment_v_given_u(u, theta, k):
    """E[V**k | U=u] by adaptive quadrature of the conditional density."""
    th = as_theta(theta)
    t, a = th.theta, th.threshold
    w = 1.0 - float(u)
    if w <= 0.0:
        # the conditional law collapses to a point mass at v = 0
        return 0.0
    lower, _ = integrate.quad(
        lambda s: s**k * t * (a * w / s) ** t / s, a * w, a, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    upper = (1.0 + t) * w**t * (1.0 - a ** (k + 1)) / (k + 1)
    return lower + upper


def _closed_mean_v_given_u(w, t):
    return w**t / (2.0 * (1.0 - t)) - t**2 * w / (1.0 - t**2)


def cond_mean_v_given_u(u, theta):
    """E[V | U=u] (regression of V on U)."""
    th = as_theta(theta)
    t = th.theta
    scalar = _is_scalar(u)
    u = _unit(u, "u")
    if abs(t - 1.0) < SINGULAR_BAND:
        out = np.vectorize(lambda x: quad_moment_v_given_u(x, th, 1), otypes=[float])(u)
    else:
        out = _closed_mean_v_given_u(1.0 - u, t)
    return _result(np.asarray(out, dtype=float), scalar)


def cond_var_v_given_u(u, theta):
    """Var[V | U=u] from the re-derived second moment."""
    th = as_theta(theta)
    t = th.theta
    scalar = _is_scalar(u)
    u = _unit(u, "u")
    if abs(t - 1.0) < SINGULAR_BAND or abs(t - 2.0) < SINGULAR_BAND:

        def var_at(x):
            m1 = quad_moment_v_given_u(x, th, 1)
            return quad_moment_v_given_u(x, th, 2) - m1**2

        out = np.vectorize(var_at, otypes=[float])(u)
    else:
        w = 1.0 - u
        m1 = _closed_mean_v_given_u(w, t)
        m2 = t**3 * (w**t - w**2) / ((1.0 + t) ** 2 * (2.0 - t)) + w**t * (
            1.0 + 3.0 * t + 3.0 * t**2
        ) / (3.0 * (1.0 + t) ** 2)
        out = m2 - m1**2
    return _result(np.maximum(np.asarray(out, dtype=float), 0.0), scalar)


# ---------------------
# Dependence measures
# ---------------------
def _rho(t):
    return -t * (3.0 + t) / ((1.0 + t) * (2.0 + t))


def spearman_rho(theta):
    """rho(theta) = 2(3 + 3t + t^2) / ((1 + t)(2 + t)) - 3."""
    return float(_rho(as_theta(theta).theta))


def kendall_tau(theta):
    """tau(theta) = -theta / (1 + theta)."""
    t = as_theta(theta).theta
    return -t / (1.0 + t)


def dependence_measures(theta):
    th = as_theta(theta)
    return DependenceMeasures(theta=th.theta, rho=spearman_rho(th), tau=kendall_tau(th))


def dependence_curve(theta_max, n):
    """Spearman's rho and Kendall's tau over n evenly spaced theta in (0, theta_max]."""
    thetas = np.linspace(theta_max / n, theta_max, n)
    return [dependence_measures(t) for t in thetas]


def _check_measure(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a real number, got {value!r}") from None
    if not -1.0 < value < 0.0:
        raise DomainError(f"{name} must lie in (-1, 0), got {value!r}")
    return value


def theta_from_rho(rho):
    """The unique theta with spearman_rho(theta) == rho."""
    rho = _check_measure(rho, "rho")
    # root of (1 + rho) t^2 + 3 (1 + rho) t + 2 rho = 0, in cancellation-free form
    theta = -4.0 * rho / (3.0 * (1.0 + rho) + math.sqrt((1.0 + rho) * (9.0 + rho)))
    if abs(_rho(theta) - rho) > 1e-12:
        logger.warning(f"rho inversion residual too large at rho={rho!r}; falling back to bisection")
        lo, hi = theta_range()
        theta = optimize.brentq(lambda t: _rho(t) - rho, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return DependenceParam(theta)


def theta_from_tau(tau):
    """The unique theta with kendall_tau(theta) == tau."""
    tau = _check_measure(tau, "tau")
    return DependenceParam(-tau / (1.0 + tau))

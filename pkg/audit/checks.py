"""
Numerical certification of the dependence properties of C_theta.

Every check is deterministic given its arguments and returns an
``AuditReport`` whose ``worst_violation`` is signed so that a value at or
below ``tolerance`` passes. Monotonicity and convexity are certified with
finite differences on interior grids; stencils that straddle the support
line v = a(1 - u) or the split v = a are excluded from the second-order
checks and the number excluded is reported.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from scipy import integrate

from copula import core
from copula.sampler import make_rng, open_uniforms, sample_copula
from core.exceptions import DomainError

logger = logging.getLogger(__name__)

# stream ids keep audit randomness apart from sampling and bootstrap streams
AUDIT_STREAM = 7


@dataclass(frozen=True)
class AuditReport:
    check_name: str
    theta: object
    grid_spec: str
    worst_violation: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.worst_violation <= self.tolerance)


def _report(name, theta, grid_spec, worst, tolerance, **details):
    worst = float(worst) if np.size(worst) else 0.0
    report = AuditReport(name, theta, grid_spec, worst, tolerance, details)
    log = logger.info if report.passed else logger.error
    log(f"{name} theta={theta}: worst={worst:.3e} tol={tolerance:.0e} -> {'pass' if report.passed else 'FAIL'}")
    return report


def interior_grid(resolution):
    """k / (n + 1) for k = 1..n."""
    return np.arange(1, resolution + 1) / (resolution + 1.0)


def _mesh(u, v):
    return np.meshgrid(u, v, indexing="ij")


def _pair(theta_1, theta_2):
    t1, t2 = core.as_theta(theta_1), core.as_theta(theta_2)
    if t1.theta > t2.theta:
        raise DomainError(f"ordering audits need theta1 <= theta2, got {t1.theta:g} > {t2.theta:g}")
    return t1, t2


# ---------------------
# Copula axioms
# ---------------------
def audit_boundary_conditions(theta, resolution=201):
    th = core.as_theta(theta)
    g = np.linspace(0.0, 1.0, resolution)
    zeros, ones = np.zeros_like(g), np.ones_like(g)
    worst = max(
        np.max(np.abs(core.cdf(g, zeros, th))),
        np.max(np.abs(core.cdf(zeros, g, th))),
        np.max(np.abs(core.cdf(g, ones, th) - g)),
        np.max(np.abs(core.cdf(ones, g, th) - g)),
    )
    return _report("boundary_conditions", th.theta, f"{resolution} points per edge", worst, 1e-12)


def audit_frechet_bounds(theta, resolution=201):
    th = core.as_theta(theta)
    u, v = _mesh(*(np.linspace(0.0, 1.0, resolution),) * 2)
    c = core.cdf(u, v, th)
    worst = max(np.max(np.maximum(u + v - 1.0, 0.0) - c), np.max(c - np.minimum(u, v)))
    return _report("frechet_bounds", th.theta, f"{resolution}x{resolution} grid on [0,1]^2", worst, 1e-12)


def audit_rectangle_inequality(theta, n_rect=10000, seed=0):
    """Worst negative C-volume over random rectangles.

    Half of the rectangles are uniform; the other half are small
    rectangles centred on the support line and on the split v = a.
    """
    th = core.as_theta(theta)
    if n_rect < 1:
        raise DomainError("n_rect must be at least 1")
    a = th.threshold
    rng = make_rng(seed, AUDIT_STREAM, 0)
    n_uniform = (n_rect + 1) // 2
    n_local = n_rect - n_uniform

    us = np.sort(open_uniforms(rng, 2 * n_uniform).reshape(n_uniform, 2), axis=1)
    vs = np.sort(open_uniforms(rng, 2 * n_uniform).reshape(n_uniform, 2), axis=1)

    centre_u = open_uniforms(rng, n_local)
    on_support = open_uniforms(rng, n_local) < 0.5
    centre_v = np.where(on_support, a * (1.0 - centre_u), a)
    half = 0.05 * open_uniforms(rng, (n_local, 2))
    lu = np.clip(np.column_stack([centre_u - half[:, 0], centre_u + half[:, 0]]), 0.0, 1.0)
    lv = np.clip(np.column_stack([centre_v - half[:, 1], centre_v + half[:, 1]]), 0.0, 1.0)

    u1, u2 = np.concatenate([us[:, 0], lu[:, 0]]), np.concatenate([us[:, 1], lu[:, 1]])
    v1, v2 = np.concatenate([vs[:, 0], lv[:, 0]]), np.concatenate([vs[:, 1], lv[:, 1]])
    volume = core.cdf(u2, v2, th) - core.cdf(u2, v1, th) - core.cdf(u1, v2, th) + core.cdf(u1, v1, th)
    return _report(
        "rectangle_inequality", th.theta, f"{n_rect} random rectangles (seed={seed})",
        np.max(-volume), 1e-12, min_volume=float(np.min(volume)),
    )


# ---------------------
# Negative dependence notions
# ---------------------
def audit_nqd(theta, resolution=200):
    """C(u, v) <= uv on a closed grid."""
    th = core.as_theta(theta)
    u, v = _mesh(*(np.linspace(0.0, 1.0, resolution),) * 2)
    worst = np.max(core.cdf(u, v, th) - u * v)
    return _report("nqd", th.theta, f"{resolution}x{resolution} grid on [0,1]^2", worst, 1e-12)


def audit_tail_monotonicity(theta, resolution=200):
    """LTI(Y|X), LTI(X|Y), RTD(Y|X), RTD(X|Y) via monotone ratios.

    Central differences of C/u in u, C/v in v, (v - C)/(1 - u) in u and
    (u - C)/(1 - v) in v must all be >= -1e-9.
    """
    th = core.as_theta(theta)
    g = interior_grid(resolution)
    u, v = _mesh(g, g)
    c = core.cdf(u, v, th)

    def drop_along_u(ratio):
        return np.max(-(ratio[2:, :] - ratio[:-2, :]))

    def drop_along_v(ratio):
        return np.max(-(ratio[:, 2:] - ratio[:, :-2]))

    sub = {
        "lti_y_given_x": float(drop_along_u(c / u)),
        "lti_x_given_y": float(drop_along_v(c / v)),
        "rtd_y_given_x": float(drop_along_u((v - c) / (1.0 - u))),
        "rtd_x_given_y": float(drop_along_v((u - c) / (1.0 - v))),
    }
    return _report(
        "tail_monotonicity", th.theta, f"{resolution}x{resolution} interior grid",
        max(sub.values()), 1e-9, **sub,
    )


def _same_region(codes, axis):
    """Mask of interior stencil centres whose neighbours share their region."""
    if axis == 0:
        return (codes[:-2, :] == codes[1:-1, :]) & (codes[2:, :] == codes[1:-1, :])
    return (codes[:, :-2] == codes[:, 1:-1]) & (codes[:, 2:] == codes[:, 1:-1])


def audit_stochastic_monotonicity(theta, resolution=200):
    """SD(Y|X) and SD(X|Y): C convex in each argument (second differences >= -1e-9)."""
    th = core.as_theta(theta)
    g = interior_grid(resolution)
    u, v = _mesh(g, g)
    c = core.cdf(u, v, th)
    codes = core.region_codes(u, v, th)

    d2u = c[2:, :] - 2.0 * c[1:-1, :] + c[:-2, :]
    d2v = c[:, 2:] - 2.0 * c[:, 1:-1] + c[:, :-2]
    keep_u, keep_v = _same_region(codes, 0), _same_region(codes, 1)
    sub = {
        "sd_y_given_x": float(np.max(-d2u[keep_u], initial=0.0)),
        "sd_x_given_y": float(np.max(-d2v[keep_v], initial=0.0)),
    }
    return _report(
        "stochastic_monotonicity", th.theta, f"{resolution}x{resolution} interior grid",
        max(sub.values()), 1e-9,
        excluded_u=int(keep_u.size - keep_u.sum()), excluded_v=int(keep_v.size - keep_v.sum()), **sub,
    )


def audit_subharmonic(theta, resolution=399):
    """Five-point Laplacian of C >= -1e-7 away from region boundaries."""
    th = core.as_theta(theta)
    g = interior_grid(resolution)
    h = 1.0 / (resolution + 1.0)
    u, v = _mesh(g, g)
    c = core.cdf(u, v, th)
    codes = core.region_codes(u, v, th)
    lap = (c[2:, 1:-1] + c[:-2, 1:-1] + c[1:-1, 2:] + c[1:-1, :-2] - 4.0 * c[1:-1, 1:-1]) / h**2
    keep = _same_region(codes, 0)[:, 1:-1] & _same_region(codes, 1)[1:-1, :]
    analytic = np.asarray(core.laplacian(u[1:-1, 1:-1], v[1:-1, 1:-1], th))
    return _report(
        "subharmonic", th.theta, f"{resolution}x{resolution} interior grid, h=1/{resolution + 1}",
        np.max(-lap[keep], initial=0.0), 1e-7,
        excluded=int(keep.size - keep.sum()), analytic_min=float(np.min(analytic[keep], initial=0.0)),
    )


def _quadruples(th, n_quad, seed):
    """Random u1 <= u2, v1 <= v2; half uniform, half spanned by draws from C_theta."""
    rng = make_rng(seed, AUDIT_STREAM, 1)
    n_uniform = (n_quad + 1) // 2
    n_copula = n_quad - n_uniform
    us = open_uniforms(rng, 2 * n_uniform).reshape(n_uniform, 2)
    vs = open_uniforms(rng, 2 * n_uniform).reshape(n_uniform, 2)
    if n_copula:
        batch = sample_copula(2 * n_copula, th, seed, stream=AUDIT_STREAM, index=2)
        us = np.vstack([us, batch.u.reshape(n_copula, 2)])
        vs = np.vstack([vs, batch.v.reshape(n_copula, 2)])
    us.sort(axis=1)
    vs.sort(axis=1)
    return us[:, 0], us[:, 1], vs[:, 0], vs[:, 1]


def _log_excess(larger, smaller):
    """Relative amount by which exp(larger) exceeds exp(smaller); -inf handled."""
    out = np.zeros_like(larger)
    both = np.isfinite(larger) & np.isfinite(smaller)
    out[both] = np.expm1(larger[both] - smaller[both])
    out[np.isfinite(larger) & ~np.isfinite(smaller)] = np.inf
    return out


def audit_nlr(theta, n_quad=10000, seed=0):
    """c(u1,v1) c(u2,v2) <= c(u1,v2) c(u2,v1), with equality when all four are positive."""
    th = core.as_theta(theta)
    u1, u2, v1, v2 = _quadruples(th, n_quad, seed)
    lhs = core.log_pdf(u1, v1, th) + core.log_pdf(u2, v2, th)
    rhs = core.log_pdf(u1, v2, th) + core.log_pdf(u2, v1, th)
    excess = _log_excess(lhs, rhs)
    in_support = np.isfinite(lhs) & np.isfinite(rhs)
    equality_error = np.abs(excess[in_support])
    worst = max(np.max(excess), np.max(equality_error, initial=0.0))
    return _report(
        "nlr", th.theta, f"{n_quad} random quadruples (seed={seed})", worst, 1e-10,
        in_support=int(in_support.sum()),
        equality_error=float(np.max(equality_error, initial=0.0)),
    )


# ---------------------
# Orderings between two parameters
# ---------------------
def audit_order_nqd(theta_1, theta_2, resolution=200):
    """C_theta2 <= C_theta1 pointwise for theta1 <= theta2."""
    t1, t2 = _pair(theta_1, theta_2)
    u, v = _mesh(*(np.linspace(0.0, 1.0, resolution),) * 2)
    worst = np.max(core.cdf(u, v, t2) - core.cdf(u, v, t1))
    return _report(
        "order_nqd", (t1.theta, t2.theta), f"{resolution}x{resolution} grid on [0,1]^2", worst, 1e-12,
    )


def audit_order_nrd(theta_1, theta_2, u_resolution=100, v_resolution=100):
    """T(u) = C_theta2^-1(C_theta1(v | u) | u) is nonincreasing in u for every v."""
    t1, t2 = _pair(theta_1, theta_2)
    u, v = _mesh(interior_grid(u_resolution), interior_grid(v_resolution))
    p = core._cdf_v_given_u(v, u, t1.theta, t1.threshold)
    transform = core._quantile_v_given_u(p, u, t2.theta, t2.threshold)
    rise = np.diff(transform, axis=0)
    return _report(
        "order_nrd", (t1.theta, t2.theta), f"{u_resolution}x{v_resolution} interior grid",
        np.max(rise, initial=0.0), 1e-9,
    )


def audit_order_nlr(theta_1, theta_2, n_quad=10000, seed=0):
    """f11 f22 g12 g21 >= f12 f21 g11 g22 with f = c_theta1, g = c_theta2."""
    t1, t2 = _pair(theta_1, theta_2)
    u1, u2, v1, v2 = _quadruples(t2, n_quad, seed)
    f = lambda s, t: core.log_pdf(s, t, t1)  # noqa: E731
    g = lambda s, t: core.log_pdf(s, t, t2)  # noqa: E731
    larger = f(u1, v1) + f(u2, v2) + g(u1, v2) + g(u2, v1)
    smaller = f(u1, v2) + f(u2, v1) + g(u1, v1) + g(u2, v2)
    excess = _log_excess(smaller, larger)
    return _report(
        "order_nlr", (t1.theta, t2.theta), f"{n_quad} random quadruples (seed={seed})",
        np.max(excess), 1e-12,
        in_support=int(np.sum(np.isfinite(larger) & np.isfinite(smaller))),
    )


# ---------------------
# Quadrature oracles
# ---------------------
def _density_integral(u, v, th):
    """Adaptive quadrature of c over [0, u] x [0, v]."""
    a = th.threshold

    def inner(s):
        lo = a * (1.0 - s)
        if v <= lo:
            return 0.0
        points = [a] if lo < a < v else None
        value, _ = integrate.quad(
            lambda t: core.pdf(s, t, th), lo, v, points=points, epsabs=1e-11, epsrel=1e-11, limit=200
        )
        return value

    kink = 1.0 - v / a
    points = [kink] if 0.0 < kink < u else None
    value, _ = integrate.quad(inner, 0.0, u, points=points, epsabs=1e-10, epsrel=1e-10, limit=200)
    return value


def audit_absolute_continuity(theta, n_points=100, seed=0):
    """The integral of c over [0,u] x [0,v] reproduces C(u, v)."""
    th = core.as_theta(theta)
    rng = make_rng(seed, AUDIT_STREAM, 3)
    us, vs = open_uniforms(rng, n_points), open_uniforms(rng, n_points)
    errors = [abs(_density_integral(u, v, th) - core.cdf(u, v, th)) for u, v in zip(us, vs)]
    return _report(
        "absolute_continuity", th.theta, f"{n_points} random points (seed={seed})", max(errors), 1e-6,
    )


def spearman_rho_quad(theta):
    """12 times the integral of C over the unit square, minus 3."""
    th = core.as_theta(theta)
    a = th.threshold

    def inner(u):
        lo = a * (1.0 - u)
        value, _ = integrate.quad(
            lambda v: core.cdf(u, v, th), lo, 1.0,
            points=[a] if lo < a else None, epsabs=1e-12, epsrel=1e-12, limit=200,
        )
        return value

    total, _ = integrate.quad(inner, 0.0, 1.0, epsabs=1e-11, epsrel=1e-11, limit=200)
    return 12.0 * total - 3.0


def kendall_tau_quad(theta):
    """1 - 4 times the integral of dC/du * dC/dv, equal to 4 E[C(U, V)] - 1."""
    th = core.as_theta(theta)
    t, a = th.theta, th.threshold

    def inner(u):
        lo = a * (1.0 - u)
        value, _ = integrate.quad(
            lambda v: float(core._cdf_v_given_u(v, u, t, a) * core._cdf_u_given_v(u, v, t, a)),
            lo, 1.0, points=[a] if lo < a else None, epsabs=1e-12, epsrel=1e-12, limit=200,
        )
        return value

    total, _ = integrate.quad(inner, 0.0, 1.0, epsabs=1e-11, epsrel=1e-11, limit=200)
    return 1.0 - 4.0 * total


def audit_measures(theta):
    """Closed-form rho and tau against quadrature, and rho < tau."""
    th = core.as_theta(theta)
    rho, tau = core.spearman_rho(th), core.kendall_tau(th)
    rho_q, tau_q = spearman_rho_quad(th), kendall_tau_quad(th)
    worst = max(abs(rho_q - rho), abs(tau_q - tau), rho - tau)
    return _report(
        "measures", th.theta, "adaptive quadrature on [0,1]^2", worst, 1e-6,
        rho=rho, rho_quad=rho_q, tau=tau, tau_quad=tau_q,
    )


# ---------------------
# Suites
# ---------------------
def run_standard_suite(
    theta=None, theta_pair=None, *, resolution=200, n_random=10000, n_points=20, seed=0, workers=None,
):
    """Run every single-theta check for ``theta`` and every ordering check for ``theta_pair``.

    ``n_points`` is the number of random points of the absolute-continuity
    check, which integrates the density once per point.

    Checks run on a thread pool; the report order is fixed regardless of
    the worker count.
    """
    if theta is None and theta_pair is None:
        raise DomainError("the audit suite needs theta, a theta pair, or both")
    jobs = []
    if theta is not None:
        th = core.as_theta(theta)
        jobs += [
            (audit_boundary_conditions, (th,)),
            (audit_frechet_bounds, (th,)),
            (audit_rectangle_inequality, (th, n_random, seed)),
            (audit_nqd, (th, resolution)),
            (audit_tail_monotonicity, (th, resolution)),
            (audit_stochastic_monotonicity, (th, resolution)),
            (audit_subharmonic, (th, 2 * resolution - 1)),
            (audit_nlr, (th, n_random, seed)),
            (audit_absolute_continuity, (th, n_points, seed)),
            (audit_measures, (th,)),
        ]
    if theta_pair is not None:
        t1, t2 = _pair(*theta_pair)
        jobs += [
            (audit_order_nqd, (t1, t2, resolution)),
            (audit_order_nrd, (t1, t2, resolution // 2, resolution // 2)),
            (audit_order_nlr, (t1, t2, n_random, seed)),
        ]
    workers = workers or getattr(settings, "NEGACOPULA_WORKERS", 1)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(fn, *args) for fn, args in jobs]
        return [f.result() for f in futures]

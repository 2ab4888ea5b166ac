"""
Seedable conditional-inversion sampling from C_theta.

Every draw comes from ``numpy.random.Generator(PCG64)`` seeded by a
``SeedSequence(seed, spawn_key=(stream, index))``, so a batch is a pure
function of (seed, n, theta) and parallel replicates never share a stream.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from copula.core import (
    UnitPoint,
    _quantile_u_given_v,
    _quantile_v_given_u,
    as_theta,
)
from core.exceptions import DomainError

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.PCG64"
SAMPLING_METHODS = ("u_given_v", "v_given_u")

_MAX_SEED = 2**64 - 1
_OPEN_UNIT_SCALE = 2.0**-53


def rng_info(seed):
    """The generator identity every report embeds."""
    return {"algorithm": RNG_ALGORITHM, "numpy_version": np.__version__, "seed": int(seed)}


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= _MAX_SEED:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return int(seed)


def make_rng(seed, stream=0, index=0):
    """Generator for replicate ``index`` of ``stream`` derived from ``seed``."""
    seq = np.random.SeedSequence(check_seed(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(seq))


def open_uniforms(rng, n):
    """n uniforms strictly inside (0, 1), on the 2**-53 lattice offset by half a step."""
    k = rng.integers(0, 2**53, size=n, dtype=np.int64)
    return (k.astype(float) + 0.5) * _OPEN_UNIT_SCALE


@dataclass(frozen=True)
class SampleBatch:
    u: np.ndarray
    v: np.ndarray
    seed: int
    theta: float
    method: str = "u_given_v"
    rng: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.u)

    @property
    def pairs(self):
        return [UnitPoint(float(a), float(b)) for a, b in zip(self.u, self.v)]


def sample_copula(n, theta, seed, *, method="u_given_v", stream=0, index=0):
    """Draw n pairs from C_theta by conditional inversion.

    ``u_given_v`` draws V uniform and inverts U | V; ``v_given_u`` draws U
    uniform and inverts V | U.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    if method not in SAMPLING_METHODS:
        raise DomainError(f"unknown sampling method {method!r}; choose from {SAMPLING_METHODS}")
    th = as_theta(theta)
    rng = make_rng(seed, stream, index)
    first = open_uniforms(rng, n)
    p = open_uniforms(rng, n)

    if method == "u_given_v":
        v = first
        u = _quantile_u_given_v(p, v, th.theta, th.threshold)
    else:
        u = first
        v = _quantile_v_given_u(p, u, th.theta, th.threshold)

    logger.debug(f"sampled {n} pairs from C_theta (theta={th.theta:g}, seed={seed}, method={method})")
    return SampleBatch(u=u, v=v, seed=int(seed), theta=th.theta, method=method, rng=rng_info(seed))


@dataclass(frozen=True)
class BivariateSample:
    x: np.ndarray
    y: np.ndarray
    copula: SampleBatch

    def __len__(self):
        return len(self.x)


def sample_bivariate(n, model, seed, *, method="u_given_v", stream=0, index=0):
    """(F^-1(u), G^-1(v)) for a copula batch; ``model`` is a BivariateModel."""
    batch = sample_copula(n, model.theta, seed, method=method, stream=stream, index=index)
    x = np.asarray(model.margin_x.quantile(batch.u), dtype=float)
    y = np.asarray(model.margin_y.quantile(batch.v), dtype=float)
    return BivariateSample(x=x, y=y, copula=batch)

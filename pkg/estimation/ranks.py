"""
Rank-based dependence estimation: paired data, pseudo-observations,
empirical Spearman's rho / Kendall's tau and theta by rank inversion.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from copula.core import UnitPoint, theta_from_rho, theta_from_tau
from core.exceptions import ConstantColumn, DomainError, InsufficientData, PositiveDependence

logger = logging.getLogger(__name__)

ESTIMATION_METHODS = ("rho_inversion", "tau_inversion")
MIN_PAIRS = 3


@dataclass(frozen=True)
class PairedData:
    """Complete (x, y) pairs; ``dropped`` counts rows removed for missing values."""

    x: np.ndarray
    y: np.ndarray
    dropped: int = 0
    labels: tuple = ("x", "y")

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size:
            raise DomainError(f"paired columns differ in length: {x.size} vs {y.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("paired data must be finite; use PairedData.from_columns to drop missing rows")
        if x.size < MIN_PAIRS:
            raise InsufficientData(f"need at least {MIN_PAIRS} complete pairs, got {x.size}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_columns(cls, x, y, labels=("x", "y")):
        """Keep the pairwise-complete rows; NaN marks a missing value."""
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.size != y.size:
            raise DomainError(f"paired columns differ in length: {x.size} vs {y.size}")
        keep = np.isfinite(x) & np.isfinite(y)
        dropped = int(x.size - keep.sum())
        if dropped:
            logger.info(f"dropped {dropped} of {x.size} rows with a missing {labels[0]} or {labels[1]}")
        return cls(x[keep], y[keep], dropped=dropped, labels=tuple(labels))

    @property
    def n(self):
        return int(self.x.size)

    def __len__(self):
        return self.n


def _paired(data):
    if isinstance(data, PairedData):
        return data
    x, y = data
    return PairedData(x, y)


def rank_transform(data):
    """(u, v) arrays of average ranks divided by n + 1."""
    data = _paired(data)
    scale = data.n + 1.0
    return stats.rankdata(data.x) / scale, stats.rankdata(data.y) / scale


def pseudo_observations(data):
    u, v = rank_transform(data)
    return [UnitPoint(float(a), float(b)) for a, b in zip(u, v)]


def _check_variation(data):
    for label, column in zip(data.labels, (data.x, data.y)):
        if np.ptp(column) == 0:
            raise ConstantColumn(f"column {label!r} is constant; rank correlations are undefined")


def empirical_rho(data):
    """Spearman's rho: Pearson correlation of the average ranks."""
    data = _paired(data)
    _check_variation(data)
    return float(stats.spearmanr(data.x, data.y).statistic)


def empirical_tau(data):
    """Kendall's tau-b (tie corrected)."""
    data = _paired(data)
    _check_variation(data)
    return float(stats.kendalltau(data.x, data.y, variant="b").statistic)


def estimate_theta(data, method="rho_inversion"):
    """Invert the empirical rank correlation into theta.

    Raises PositiveDependence when the empirical measure is not negative.
    """
    if method not in ESTIMATION_METHODS:
        raise DomainError(f"unknown estimation method {method!r}; choose from {ESTIMATION_METHODS}")
    if method == "rho_inversion":
        measure, value, invert = "Spearman's rho", empirical_rho(data), theta_from_rho
    else:
        measure, value, invert = "Kendall's tau", empirical_tau(data), theta_from_tau
    if value >= 0.0:
        logger.error(f"{measure} = {value:.6g} is not negative; stopping")
        raise PositiveDependence(measure, value)
    theta = invert(value)
    logger.info(f"{measure} = {value:.6f} -> theta_hat = {theta.theta:.6f}")
    return theta

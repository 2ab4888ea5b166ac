"""
Kolmogorov-Smirnov goodness of fit with a parametric bootstrap.

Each replicate draws n values from the fitted model, refits the same
family and recomputes the statistic, so the p-value accounts for the
estimated parameters. Replicate i always uses stream (seed, stream, i);
the p-value does not depend on the number of workers.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import stats
from tqdm import tqdm

from copula.sampler import check_seed, make_rng, open_uniforms
from core.exceptions import BootstrapFailure, DomainError, FailedConvergence, NonPositiveData
from marginals.distributions import Family
from marginals.fitting import mle_fit

logger = logging.getLogger(__name__)

MIN_BOOTSTRAP = 100


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    n_bootstrap: int
    seed: int
    dropped: int = 0
    stream: int = 0


def ks_statistic(column, model):
    """D_n = sup |F_emp - F_fit| for a MarginalModel."""
    x = np.asarray(column, dtype=float).ravel()
    return float(stats.kstest(x, model.cdf).statistic)


def _replicate(model, n, seed, stream, index):
    rng = make_rng(seed, stream, index)
    synthetic = np.asarray(model.quantile(open_uniforms(rng, n)), dtype=float)
    try:
        refit = mle_fit(model.family, synthetic)
    except (FailedConvergence, NonPositiveData) as exc:
        logger.warning(f"bootstrap replicate {index} dropped: {exc}")
        return None
    return ks_statistic(synthetic, refit.model)


def ks_test_bootstrap(column, fitted, B=None, seed=None, *, stream=0, workers=None, progress=False):
    """Observed KS statistic and its parametric-bootstrap p-value.

    The p-value is the share of valid replicates whose statistic is at
    least the observed one. More than NEGACOPULA_MAX_BOOTSTRAP_DROP of
    replicates failing to refit raises BootstrapFailure.
    """
    B = getattr(settings, "NEGACOPULA_DEFAULT_BOOTSTRAP", 10000) if B is None else B
    seed = getattr(settings, "NEGACOPULA_DEFAULT_SEED", 0) if seed is None else seed
    seed = check_seed(seed)
    if isinstance(B, bool) or not isinstance(B, (int, np.integer)) or B < MIN_BOOTSTRAP:
        raise DomainError(f"bootstrap size must be an integer >= {MIN_BOOTSTRAP}, got {B!r}")
    if fitted.family is Family.BASELINE_Y:
        raise DomainError("the bootstrap refits the model and baseline_y has no MLE")
    x = np.asarray(column, dtype=float).ravel()
    n = x.size
    observed = ks_statistic(x, fitted)

    def run(i):
        return _replicate(fitted, n, seed, stream, i)

    workers = workers or getattr(settings, "NEGACOPULA_WORKERS", 1)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = pool.map(run, range(int(B)))
        if progress:
            results = tqdm(results, total=int(B), desc=f"KS bootstrap ({fitted.family.value})", unit="rep")
        replicates = list(results)

    valid = np.array([d for d in replicates if d is not None], dtype=float)
    dropped = int(B) - valid.size
    max_drop = getattr(settings, "NEGACOPULA_MAX_BOOTSTRAP_DROP", 0.01)
    if dropped > max_drop * B:
        logger.error(f"{dropped} of {B} bootstrap refits failed")
        raise BootstrapFailure(f"{dropped} of {B} bootstrap refits failed (limit {max_drop:.0%})")

    p_value = float(np.mean(valid >= observed))
    logger.info(
        f"KS {fitted}: D={observed:.6f}, p={p_value:.4f} (B={B}, dropped={dropped}, seed={seed})"
    )
    return KSResult(observed, p_value, int(B), seed, dropped, int(stream))

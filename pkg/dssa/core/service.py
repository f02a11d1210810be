"""
Problem Core Service

Empirical mean operator, oracle error and moment estimation.
"""

from collections.abc import Callable

import numpy as np
from scipy import stats

from ..exceptions import DimensionMismatchError
from ..logging import get_logger
from ..projections.service import as_point
from ..sampling.models import RngPlan, StreamTag
from ..sampling.service import draw_batch
from .models import Matrix, MeanOperator, MomentEstimate, OracleBatch, ProblemInstance, StochasticOracle, Vector

logger = get_logger(__name__)

BOOTSTRAP_RESAMPLES = 200
# lane used for bootstrap resampling streams, kept apart from oracle lanes
BOOTSTRAP_LANE = 2**31 - 1


def evaluate_batch(oracle: StochasticOracle, batch: OracleBatch, x) -> Matrix:
    """Stacked evaluations F(xi_j, x), shape (N, d)."""
    if batch.size < 1:
        raise ValueError("batch must be nonempty")
    x = as_point(x, oracle.dimension, "evaluation point")
    values = np.asarray(oracle.evaluate(batch.samples, x), dtype=float)
    if values.shape != (batch.size, oracle.dimension):
        raise DimensionMismatchError(oracle.dimension, values.shape, "oracle output")
    return values


def empirical_mean(oracle: StochasticOracle, batch: OracleBatch, x) -> Vector:
    """F_hat(xi^N, x) = (1/N) sum_j F(xi_j, x), reduced row by row in sample order.

    Oracles that pre-average their samples answer through ``batch_mean``.
    """
    if batch.size < 1:
        raise ValueError("batch must be nonempty")
    point = as_point(x, oracle.dimension, "evaluation point")
    reduced = oracle.batch_mean(batch.samples, point)
    if reduced is not None:
        reduced = np.asarray(reduced, dtype=float)
        if reduced.shape != (oracle.dimension,):
            raise DimensionMismatchError(oracle.dimension, reduced.shape, "oracle batch mean")
        return reduced
    values = evaluate_batch(oracle, batch, point)
    return np.add.reduce(values, axis=0) / batch.size


def oracle_error(oracle: StochasticOracle, mean: MeanOperator, batch: OracleBatch, x) -> Matrix:
    """eps(xi_j, x) = F(xi_j, x) - T(x) for each sample of the batch, shape (N, d)."""
    if mean is None:
        raise ValueError("oracle error needs the exact mean operator")
    values = evaluate_batch(oracle, batch, x)
    target = mean(np.asarray(x, dtype=float))
    if target.shape != (oracle.dimension,):
        raise DimensionMismatchError(oracle.dimension, target.shape, "mean operator output")
    return values - target


def bootstrap_standard_error(
    values: np.ndarray,
    statistic: Callable[[np.ndarray, int], np.ndarray],
    rng: np.random.Generator,
    n_resamples: int = BOOTSTRAP_RESAMPLES,
) -> float:
    """Bootstrap standard error of a vectorized ``statistic(sample, axis)``."""
    values = np.asarray(values, dtype=float)
    if values.size < 2 or np.all(values == values.flat[0]):
        return 0.0
    result = stats.bootstrap(
        (values,),
        statistic,
        n_resamples=n_resamples,
        vectorized=True,
        method="percentile",
        random_state=rng,
    )
    return float(result.standard_error)


def p_norm_statistic(p: float) -> Callable[[np.ndarray, int], np.ndarray]:
    """Statistic mapping samples of ||eps||^p to (mean ||eps||^p)^(1/p)."""
    def statistic(sample, axis=-1):
        return np.mean(sample, axis=axis) ** (1.0 / p)
    return statistic


def estimate_p_norm(norms: np.ndarray, p: float, rng: np.random.Generator) -> tuple[float, float]:
    """(mean ||eps||^p)^(1/p) over the given norms and its bootstrap SE."""
    norms = np.asarray(norms, dtype=float)
    if not np.any(norms > 0):
        return 0.0, 0.0
    powered = norms**p
    value = float(np.mean(powered) ** (1.0 / p))
    return value, bootstrap_standard_error(powered, p_norm_statistic(p), rng)


def estimate_sigma_p(
    problem: ProblemInstance,
    x,
    p: float,
    n_samples: int,
    plan: RngPlan,
    k: int = 0,
) -> MomentEstimate:
    """Monte Carlo estimate of sigma_p(x) = (E||eps(xi, x)||^p)^(1/p).

    Samples come from the validation stream of ``plan`` at index ``k``.
    """
    if p < 2:
        raise ValueError(f"moment order p must be at least 2, got {p}")
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples, got {n_samples}")
    if problem.mean is None:
        raise ValueError(f"problem {problem.name} has no exact mean operator")

    batch = draw_batch(problem.oracle, plan, k, StreamTag.VALIDATION, n_samples)
    errors = oracle_error(problem.oracle, problem.mean, batch, x)
    norms = np.linalg.norm(errors, axis=1)
    value, se = estimate_p_norm(norms, p, plan.child(BOOTSTRAP_LANE).generator(k, StreamTag.VALIDATION))
    logger.debug("sigma_%s estimate at ||x||=%.3g: %.6g (SE %.3g)", p, np.linalg.norm(x), value, se)
    return MomentEstimate(value=value, standard_error=se, p=p, n_samples=n_samples)

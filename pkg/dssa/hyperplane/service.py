"""
Hyperplane Line-Search Service

Dynamic sampled hyperplane projection method for Hölder continuous operators.
With g^k = x^k - beta_k F_hat(xi^k, x^k) and a single batch xi^k, the line
search finds the largest alpha = theta^l * alpha_hat with

    <F_hat(xi^k, z(alpha)), x^k - P(g^k)> >= (lam / beta_k) ||x^k - P(g^k)||^2,
    z(alpha) = alpha P(g^k) + (1 - alpha) x^k,

and the iterate is projected off the separating hyperplane through z^k:

    x^{k+1} = P(x^k - gamma_k F_hat(xi^k, z^k)),
    gamma_k = <F_hat(xi^k, z^k), x^k - z^k> / ||F_hat(xi^k, z^k)||^2.
"""

import time
from typing import Optional, Union

import numpy as np

from ..core.models import OracleBatch, ProblemInstance, StochasticOracle, Vector
from ..core.service import empirical_mean
from ..exceptions import ConfigError, DegenerateStepError, InvariantViolationError, LineSearchExhaustedError, SolverAbortError
from ..experiments.models import RunResult, RunStatus
from ..extragradient.models import Converged, LineSearchResult
from ..extragradient.service import budget_exhausted, finish, start_point, stop_threshold
from ..logging import get_logger
from ..projections.models import FeasibleSet
from ..projections.service import natural_residual, project
from ..sampling.models import RngPlan, StreamTag
from ..sampling.service import draw_batch, schedule_size, summable_inverse_sqrt
from .models import HyperplaneConfig, HyperplaneRecord

logger = get_logger(__name__)

DEGENERATE_NORM_SQ = 1e-24
GAMMA_SLACK = 1e-12


def hyperplane_line_search(
    oracle: StochasticOracle,
    feasible_set: FeasibleSet,
    batch: OracleBatch,
    x_k: Vector,
    projected_g: Vector,
    beta_k: float,
    config: HyperplaneConfig,
) -> LineSearchResult:
    """Largest alpha whose convex-combination point passes the separation test."""
    direction = x_k - projected_g
    target = (config.lam / beta_k) * float(direction @ direction)
    for ell in range(config.max_backtracks + 1):
        alpha = config.alpha_hat * config.theta**ell
        z = alpha * projected_g + (1.0 - alpha) * x_k
        f_at_z = empirical_mean(oracle, batch, z)
        if float(f_at_z @ direction) >= target:
            return LineSearchResult(alpha=alpha, z=z, ell=ell, f_at_z=f_at_z)
    raise LineSearchExhaustedError(config.max_backtracks, k=batch.k)


def hyperplane_step(
    oracle: StochasticOracle,
    feasible_set: FeasibleSet,
    plan: RngPlan,
    k: int,
    x_k: Vector,
    config: HyperplaneConfig,
    calls_so_far: int = 0,
    problem: Optional[ProblemInstance] = None,
) -> Union[tuple[Vector, HyperplaneRecord], Converged]:
    """One iteration on a single batch. Returns the next iterate and its record, or Converged."""
    schedule = config.schedule.with_base(oracle.dimension)
    n_k = schedule_size(schedule, k)
    xi = draw_batch(oracle, plan, k, StreamTag.XI, n_k)
    f_at_x = empirical_mean(oracle, xi, x_k)

    beta_k = config.beta(k)
    g_k = x_k - beta_k * f_at_x
    projected_g = project(feasible_set, g_k)
    stop_residual = float(np.linalg.norm(x_k - projected_g))
    if stop_residual <= stop_threshold(config.residual_tolerance, x_k):
        return Converged(x=x_k, k=k, n_k=n_k, residual=stop_residual)

    search = hyperplane_line_search(oracle, feasible_set, xi, x_k, projected_g, beta_k, config)
    f_at_z = search.f_at_z
    norm_sq = float(f_at_z @ f_at_z)
    if norm_sq < DEGENERATE_NORM_SQ:
        raise DegenerateStepError(
            f"||F_hat(xi, z)||^2 = {norm_sq:.3e} while the stop test failed (residual {stop_residual:.3e})", k=k
        )
    separation = float(f_at_z @ (x_k - search.z))
    if not separation > 0.0:
        raise InvariantViolationError(f"<F_hat(xi, z), x - z> = {separation!r} is not positive", k=k)

    gamma_k = separation / norm_sq
    gamma_bound = search.alpha * beta_k / config.lam + GAMMA_SLACK
    if not 0.0 < gamma_k < gamma_bound:
        raise InvariantViolationError(f"gamma_k={gamma_k!r} outside (0, alpha*beta/lam) = (0, {gamma_bound!r})", k=k)

    x_next = project(feasible_set, x_k - gamma_k * f_at_z)

    record = HyperplaneRecord(
        k=k,
        x_k=x_k,
        z_k=search.z,
        alpha_k=search.alpha,
        ell_k=search.ell,
        n_k=n_k,
        oracle_calls_cum=calls_so_far + (1 + search.ell) * n_k,
        residual_est=natural_residual(feasible_set, f_at_x, x_k, 1.0),
        # evaluation at x^k plus ell + 1 line-search trials
        evaluations=(search.ell + 2) * n_k,
        g_k=g_k,
        beta_k=beta_k,
        gamma_k=gamma_k,
        separation=separation,
    )
    if problem is not None and problem.mean is not None:
        record.residual_exact = natural_residual(feasible_set, problem.mean(x_k), x_k, 1.0)
        record.correlated_error = float(np.linalg.norm(f_at_z - problem.mean(search.z)))
    if problem is not None and problem.solution is not None:
        record.dist_to_solution = float(np.linalg.norm(x_k - problem.solution))

    return x_next, record


def hyperplane_solve(problem: ProblemInstance, config: HyperplaneConfig, plan: RngPlan, x0=1.0) -> RunResult:
    """Run the hyperplane line-search method until convergence or a budget runs out."""
    if not summable_inverse_sqrt(config.schedule):
        raise ConfigError(
            f"hyperplane_ls needs a schedule with sum N_k^(-1/2) < inf; '{config.schedule.kind.value}' "
            f"does not qualify (use polynomial with a > 1, or assert it on a custom schedule)"
        )
    started = time.perf_counter_ns() if config.record_timing else None
    x = start_point(problem, x0)
    schedule = config.schedule.with_base(problem.dimension)
    trace: list[HyperplaneRecord] = []
    calls = 0

    for k in range(config.max_iterations):
        if budget_exhausted(config.oracle_budget, calls, schedule_size(schedule, k)):
            logger.warning("Oracle budget %s exhausted after %s iterations", config.oracle_budget, k)
            return finish(config.method, problem, x, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)
        try:
            outcome = hyperplane_step(problem.oracle, problem.feasible_set, plan, k, x, config, calls, problem)
        except SolverAbortError as e:
            logger.error("Hyperplane method aborted: %s", e.message)
            return finish(config.method, problem, x, trace, RunStatus.ABORTED,
                          abort_reason=e.message, started_ns=started)
        if isinstance(outcome, Converged):
            return finish(config.method, problem, x, trace, RunStatus.CONVERGED,
                          stop_test_calls=outcome.n_k, started_ns=started)
        x, record = outcome
        if started is not None:
            record.wall_ns = time.perf_counter_ns() - started
        calls = record.oracle_calls_cum
        trace.append(record)
        logger.debug("k=%s N_k=%s alpha=%.3g gamma=%.3g ell=%s", k, record.n_k, record.alpha_k,
                     record.gamma_k, record.ell_k)

    return finish(config.method, problem, x, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)

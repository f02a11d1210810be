"""
Baseline Solvers

Both baselines reuse the projection and sampling layers of the line-search
methods and emit the same trace format, so comparisons isolate the stepsize
policy.
"""

import time

import numpy as np

from ..core.models import ProblemInstance
from ..core.service import empirical_mean
from ..experiments.models import RunResult, RunStatus
from ..extragradient.models import IterationRecord
from ..extragradient.service import budget_exhausted, finish, start_point, stop_threshold
from ..logging import get_logger
from ..projections.service import natural_residual, project
from ..sampling.models import RngPlan, StreamTag
from ..sampling.service import draw_batch, schedule_size
from .models import AveragingRecord, BaselineConfig

logger = get_logger(__name__)


def constant_step_solve(problem: ProblemInstance, config: BaselineConfig, plan: RngPlan, x0=1.0) -> RunResult:
    """Dynamic sampled extragradient with fixed alpha = min(alpha_hat, 1/(2L))."""
    alpha = config.constant_alpha
    logger.info("constant_step: L=%s alpha=%s", config.lipschitz, alpha)
    oracle, feasible_set = problem.oracle, problem.feasible_set
    schedule = config.schedule.with_base(problem.dimension)
    started = time.perf_counter_ns() if config.record_timing else None
    x = start_point(problem, x0)
    trace: list[IterationRecord] = []
    calls = 0

    for k in range(config.max_iterations):
        n_k = schedule_size(schedule, k)
        if budget_exhausted(config.oracle_budget, calls, 2 * n_k):
            return finish(config.method, problem, x, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)
        xi = draw_batch(oracle, plan, k, StreamTag.XI, n_k)
        f_at_x = empirical_mean(oracle, xi, x)
        if natural_residual(feasible_set, f_at_x, x, alpha) <= stop_threshold(config.residual_tolerance, x):
            return finish(config.method, problem, x, trace, RunStatus.CONVERGED,
                          stop_test_calls=n_k, started_ns=started)

        z = project(feasible_set, x - alpha * f_at_x)
        eta = draw_batch(oracle, plan, k, StreamTag.ETA, n_k)
        x_next = project(feasible_set, x - alpha * empirical_mean(oracle, eta, z))
        if not np.all(np.isfinite(x_next)):
            logger.error("constant_step diverged to non-finite values at k=%s", k)
            return finish(config.method, problem, x, trace, RunStatus.ABORTED,
                          abort_reason=f"iteration {k}: iterate overflowed", started_ns=started)

        calls += 2 * n_k
        record = IterationRecord(
            k=k, x_k=x, z_k=z, alpha_k=alpha, ell_k=0, n_k=n_k,
            oracle_calls_cum=calls,
            residual_est=natural_residual(feasible_set, f_at_x, x, 1.0),
            evaluations=2 * n_k,
        )
        _attach_ground_truth(record, problem, x)
        if started is not None:
            record.wall_ns = time.perf_counter_ns() - started
        trace.append(record)
        x = x_next

    return finish(config.method, problem, x, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)


def averaging_sa_solve(problem: ProblemInstance, config: BaselineConfig, plan: RngPlan, x0=1.0) -> RunResult:
    """One-sample projected SA with alpha_k = c/sqrt(k+1) and the stepsize-weighted ergodic average."""
    oracle, feasible_set = problem.oracle, problem.feasible_set
    started = time.perf_counter_ns() if config.record_timing else None
    x = start_point(problem, x0)
    x_avg = x.copy()
    weighted_sum = np.zeros_like(x)
    weight_total = 0.0
    trace: list[AveragingRecord] = []

    for k in range(config.max_iterations):
        if budget_exhausted(config.oracle_budget, k, 1):
            break
        alpha = config.step_scale / np.sqrt(k + 1.0)
        xi = draw_batch(oracle, plan, k, StreamTag.XI, 1)
        f_at_x = empirical_mean(oracle, xi, x)

        weighted_sum += alpha * x
        weight_total += alpha
        if weight_total > 0.0:
            x_avg = weighted_sum / weight_total

        record = AveragingRecord(
            k=k, x_k=x, z_k=x_avg, alpha_k=float(alpha), ell_k=0, n_k=1,
            oracle_calls_cum=k + 1,
            residual_est=natural_residual(feasible_set, f_at_x, x, 1.0),
            evaluations=1,
            x_avg=x_avg,
        )
        _attach_ground_truth(record, problem, x_avg)
        if started is not None:
            record.wall_ns = time.perf_counter_ns() - started
        trace.append(record)
        x = project(feasible_set, x - alpha * f_at_x)

    result = finish(config.method, problem, x_avg, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)
    return result


def _attach_ground_truth(record: IterationRecord, problem: ProblemInstance, point) -> None:
    if problem.mean is not None:
        record.residual_exact = natural_residual(problem.feasible_set, problem.mean(point), point, 1.0)
    if problem.solution is not None:
        record.dist_to_solution = float(np.linalg.norm(point - problem.solution))

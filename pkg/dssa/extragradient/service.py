"""
Extragradient Line-Search Service

Dynamic sampled extragradient method. Each iteration k draws a batch xi^k of
size N_k, backtracks alpha in {theta^l * alpha_hat} until

    alpha * ||F_hat(xi^k, z(alpha)) - F_hat(xi^k, x^k)|| <= lam * ||z(alpha) - x^k||,
    z(alpha) = P(x^k - alpha * F_hat(xi^k, x^k)),

then corrects with an independent batch eta^k of the same size:

    x^{k+1} = P(x^k - alpha_k * F_hat(eta^k, z^k)).
"""

import math
import time
from typing import Optional, Union

import numpy as np

from ..core.models import OracleBatch, ProblemInstance, StochasticOracle, Vector
from ..core.service import empirical_mean
from ..exceptions import InvariantViolationError, LineSearchExhaustedError, SolverAbortError
from ..experiments.models import RunResult, RunStatus, RunTotals
from ..logging import get_logger
from ..projections.models import FeasibleSet
from ..projections.service import as_point, natural_residual, project
from ..sampling.models import RngPlan, StreamTag
from ..sampling.service import draw_batch, schedule_size, summable_inverse
from .models import Converged, ExtragradientConfig, IterationRecord, LineSearchResult

logger = get_logger(__name__)


def stop_threshold(tolerance: float, x: Vector) -> float:
    return tolerance * (1.0 + float(np.linalg.norm(x)))


def line_search(
    oracle: StochasticOracle,
    feasible_set: FeasibleSet,
    batch: OracleBatch,
    x_k: Vector,
    f_at_x: Vector,
    config: ExtragradientConfig,
) -> LineSearchResult:
    """Largest alpha = theta^l * alpha_hat passing the empirical Lipschitz test.

    ``ell`` is the accepted exponent, so ell + 1 batch evaluations were spent.
    """
    for ell in range(config.max_backtracks + 1):
        alpha = config.alpha_hat * config.theta**ell
        z = project(feasible_set, x_k - alpha * f_at_x)
        f_at_z = empirical_mean(oracle, batch, z)
        if alpha * np.linalg.norm(f_at_z - f_at_x) <= config.lam * np.linalg.norm(z - x_k):
            return LineSearchResult(alpha=alpha, z=z, ell=ell, f_at_z=f_at_z)
    raise LineSearchExhaustedError(config.max_backtracks, k=batch.k)


def lipschitz_lower_estimate(alpha: float, ell: int, config: ExtragradientConfig) -> Optional[float]:
    """A rejected trial alpha/theta certifies L_hat_k >= lam * theta / alpha_k."""
    if ell == 0:
        return None
    return config.lam * config.theta / alpha


def backtrack_bound(modulus_mean: float, config: ExtragradientConfig) -> float:
    """log_{1/theta}(alpha_hat * L_hat / ((lam * theta) ^ alpha_hat)) + 1, clamped at 0."""
    if config.theta >= 1.0:
        return math.inf
    floor = min(config.lam * config.theta, config.alpha_hat)
    ratio = config.alpha_hat * modulus_mean / floor
    return max(0.0, math.log(ratio) / math.log(1.0 / config.theta) + 1.0)


def budget_exhausted(budget: Optional[int], calls: int, next_cost: int) -> bool:
    """Whether a step costing at least ``next_cost`` oracle calls no longer fits in ``budget``.

    Line-search methods pass the cost of an ell = 0 step, so an accepted step
    can still end past the budget by its ell_k * N_k backtracking calls.
    """
    return budget is not None and calls + next_cost > budget


def check_stepsize_bounds(k: int, alpha: float, ell: int, modulus_mean: float, config: ExtragradientConfig):
    """Raise when alpha_k or ell_k leaves the bounds implied by L_hat_k."""
    floor = min(config.lam * config.theta / modulus_mean, config.alpha_hat)
    if not alpha >= floor:
        raise InvariantViolationError(f"alpha_k={alpha!r} below (lam*theta/L_hat) ^ alpha_hat = {floor!r}", k=k)
    if config.theta < 1.0 and ell > backtrack_bound(modulus_mean, config):
        raise InvariantViolationError(
            f"ell_k={ell} exceeds backtrack bound {backtrack_bound(modulus_mean, config):.6g}", k=k
        )


def step(
    oracle: StochasticOracle,
    feasible_set: FeasibleSet,
    plan: RngPlan,
    k: int,
    x_k: Vector,
    config: ExtragradientConfig,
    calls_so_far: int = 0,
    problem: Optional[ProblemInstance] = None,
) -> Union[tuple[Vector, IterationRecord], Converged]:
    """One iteration. Returns the next iterate and its record, or Converged."""
    schedule = config.schedule.with_base(oracle.dimension)
    n_k = schedule_size(schedule, k)
    xi = draw_batch(oracle, plan, k, StreamTag.XI, n_k)
    f_at_x = empirical_mean(oracle, xi, x_k)

    stop_residual = natural_residual(feasible_set, f_at_x, x_k, config.alpha_hat)
    if stop_residual <= stop_threshold(config.residual_tolerance, x_k):
        return Converged(x=x_k, k=k, n_k=n_k, residual=stop_residual)

    search = line_search(oracle, feasible_set, xi, x_k, f_at_x, config)
    eta = draw_batch(oracle, plan, k, StreamTag.ETA, n_k)
    f_at_z_eta = empirical_mean(oracle, eta, search.z)
    x_next = project(feasible_set, x_k - search.alpha * f_at_z_eta)

    record = IterationRecord(
        k=k,
        x_k=x_k,
        z_k=search.z,
        alpha_k=search.alpha,
        ell_k=search.ell,
        n_k=n_k,
        oracle_calls_cum=calls_so_far + (1 + search.ell) * n_k,
        residual_est=natural_residual(feasible_set, f_at_x, x_k, 1.0),
        lipschitz_lower=lipschitz_lower_estimate(search.alpha, search.ell, config),
        # stop test, line-search trials and the eta correction
        evaluations=(search.ell + 3) * n_k,
    )

    if config.track_modulus:
        moduli = oracle.modulus(xi.samples)
        if moduli is not None:
            record.modulus_mean = float(np.mean(moduli))
            check_stepsize_bounds(k, search.alpha, search.ell, record.modulus_mean, config)

    if problem is not None and problem.mean is not None:
        record.residual_exact = natural_residual(feasible_set, problem.mean(x_k), x_k, 1.0)
        record.correlated_error = float(np.linalg.norm(search.f_at_z - problem.mean(search.z)))
    if problem is not None and problem.solution is not None:
        record.dist_to_solution = float(np.linalg.norm(x_k - problem.solution))

    return x_next, record


def start_point(problem: ProblemInstance, x0) -> Vector:
    d = problem.dimension
    raw = np.full(d, float(x0)) if np.isscalar(x0) else as_point(x0, d, "initial point")
    return project(problem.feasible_set, raw)


def finish(
    method: str,
    problem: ProblemInstance,
    x: Vector,
    trace: list[IterationRecord],
    status: RunStatus,
    stop_test_calls: int = 0,
    abort_reason: Optional[str] = None,
    started_ns: Optional[int] = None,
) -> RunResult:
    """Assemble a RunResult with totals recomputed from the trace."""
    trace_calls = trace[-1].oracle_calls_cum if trace else 0
    totals = RunTotals(
        iterations=len(trace),
        oracle_calls=trace_calls + stop_test_calls,
        stop_test_calls=stop_test_calls,
        sample_evaluations=sum(r.evaluations for r in trace) + stop_test_calls,
        wall_ns=None if started_ns is None else time.perf_counter_ns() - started_ns,
    )
    result = RunResult(
        method=method,
        status=status,
        final_point=x,
        trace=trace,
        totals=totals,
        abort_reason=abort_reason,
    )
    if problem.mean is not None:
        result.final_residual = natural_residual(problem.feasible_set, problem.mean(x), x, 1.0)
    elif trace:
        result.final_residual = trace[-1].residual_est
    if problem.solution is not None:
        result.final_dist = float(np.linalg.norm(x - problem.solution))
    logger.info(
        "%s finished: status=%s iterations=%s oracle_calls=%s residual=%s",
        method, status.value, totals.iterations, totals.oracle_calls, result.final_residual,
    )
    return result


def solve(problem: ProblemInstance, config: ExtragradientConfig, plan: RngPlan, x0=1.0) -> RunResult:
    """Run the extragradient line-search method until convergence or a budget runs out."""
    if not summable_inverse(config.schedule):
        logger.warning("Schedule %s does not satisfy sum 1/N_k < inf; no rate guarantee applies",
                       config.schedule.kind.value)
    started = time.perf_counter_ns() if config.record_timing else None
    x = start_point(problem, x0)
    schedule = config.schedule.with_base(problem.dimension)
    trace: list[IterationRecord] = []
    calls = 0

    for k in range(config.max_iterations):
        if budget_exhausted(config.oracle_budget, calls, schedule_size(schedule, k)):
            logger.warning("Oracle budget %s exhausted after %s iterations", config.oracle_budget, k)
            return finish(config.method, problem, x, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)
        try:
            outcome = step(problem.oracle, problem.feasible_set, plan, k, x, config, calls, problem)
        except SolverAbortError as e:
            logger.error("Extragradient aborted: %s", e.message)
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
        logger.debug("k=%s N_k=%s alpha=%.3g ell=%s residual=%.3e", k, record.n_k, record.alpha_k,
                     record.ell_k, record.residual_est)

    return finish(config.method, problem, x, trace, RunStatus.BUDGET_EXHAUSTED, started_ns=started)

"""
Experiment Service

Dispatches configs to solvers, runs seeded replications and aligns
residual-versus-oracle-call curves for comparisons.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from ..baselines.service import averaging_sa_solve, constant_step_solve
from ..core.models import ProblemInstance
from ..exceptions import ProblemMismatchError
from ..extragradient.service import solve
from ..hyperplane.service import hyperplane_solve
from ..logging import get_logger
from ..problems.service import build_problem
from ..runtime.core import parallel_map
from ..sampling.models import RngPlan
from .models import ExperimentConfig, RunResult

logger = get_logger(__name__)

SOLVERS: dict[str, Callable[..., RunResult]] = {
    "extragradient_ls": solve,
    "hyperplane_ls": hyperplane_solve,
    "constant_step": constant_step_solve,
    "averaging_sa": averaging_sa_solve,
}

COMPARISON_POINTS = 60


def run_solver(problem: ProblemInstance, config: ExperimentConfig, replication: int) -> RunResult:
    """Solve ``problem`` with the configured method on replication ``replication``'s streams."""
    plan = RngPlan(config.seed).child(replication)
    solver = SOLVERS[config.method]
    return solver(problem, config.solver, plan, x0=config.x0)


def _replication_task(config: ExperimentConfig, replication: int) -> RunResult:
    return run_solver(build_problem(config.problem), config, replication)


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   problem: Optional[ProblemInstance] = None) -> tuple[ProblemInstance, list[RunResult]]:
    """Run every replication; results are ordered by replication index."""
    problem = problem or build_problem(config.problem)
    logger.info("Running %s: %s x %s replications on %s", config.name, config.method,
                config.replications, problem.name)
    replications = range(config.replications)
    if threads > 1 and config.replications > 1:
        results = parallel_map(partial(_replication_task, config), replications, threads)
    else:
        results = [run_solver(problem, config, r) for r in replications]
    return problem, results


# =============================================================================
# COMPARISON
# =============================================================================

@dataclass
class ComparisonTable:
    """Seed-averaged best residual^2 reached within each oracle-call budget."""
    labels: list[str]
    checkpoints: list[int]
    values: list[list[Optional[float]]]
    iterations_to_target: dict[str, Optional[float]] = field(default_factory=dict)
    target: float = 1e-3


def ensure_comparable(configs: Sequence[ExperimentConfig]) -> None:
    if len(configs) < 2:
        raise ProblemMismatchError("compare needs at least two configs")
    reference = configs[0]
    for other in configs[1:]:
        if other.problem != reference.problem:
            raise ProblemMismatchError(f"config '{other.name}' uses a different problem than '{reference.name}'")
        if other.seed != reference.seed or other.replications != reference.replications:
            raise ProblemMismatchError(f"config '{other.name}' uses a different seed set than '{reference.name}'")


def unique_labels(configs: Sequence[ExperimentConfig]) -> list[str]:
    labels, seen = [], {}
    for config in configs:
        label = config.name
        if label in seen:
            seen[label] += 1
            label = f"{label}-{seen[config.name]}"
        else:
            seen[label] = 0
        labels.append(label)
    return labels


def _residual_sq(result: RunResult) -> tuple[np.ndarray, np.ndarray]:
    calls = np.array([r.oracle_calls_cum for r in result.trace], dtype=float)
    residuals = np.array(
        [r.residual_exact if r.residual_exact is not None else r.residual_est for r in result.trace], dtype=float
    )
    return calls, np.minimum.accumulate(residuals**2) if residuals.size else residuals


def best_within_budget(results: Sequence[RunResult], checkpoints: np.ndarray) -> list[Optional[float]]:
    per_run = np.full((len(results), checkpoints.size), np.nan)
    for i, result in enumerate(results):
        calls, best = _residual_sq(result)
        if calls.size == 0:
            continue
        index = np.searchsorted(calls, checkpoints, side="right") - 1
        reached = index >= 0
        per_run[i, reached] = best[index[reached]]
    values = []
    for column in per_run.T:
        finite = column[np.isfinite(column)]
        values.append(float(finite.mean()) if finite.size == len(results) else None)
    return values


def iterations_to_reach(results: Sequence[RunResult], target: float) -> Optional[float]:
    """Median first iteration whose residual^2 is at most ``target``; None if some run never gets there."""
    firsts = []
    for result in results:
        _, best = _residual_sq(result)
        hits = np.nonzero(best <= target)[0]
        if hits.size == 0:
            return None
        firsts.append(int(hits[0]))
    return float(np.median(firsts)) if firsts else None


def compare(configs: Sequence[ExperimentConfig], threads: int = 1, target: float = 1e-3) -> ComparisonTable:
    """Run each config on the shared problem and align their curves on a log-spaced call grid."""
    ensure_comparable(configs)
    problem = build_problem(configs[0].problem)
    labels = unique_labels(configs)
    runs = [run_experiment(config, threads, problem)[1] for config in configs]

    all_calls = [r.trace[-1].oracle_calls_cum for results in runs for r in results if r.trace]
    first_calls = [r.trace[0].oracle_calls_cum for results in runs for r in results if r.trace]
    if not all_calls:
        return ComparisonTable(labels=labels, checkpoints=[], values=[[] for _ in labels], target=target)
    lo, hi = max(1, min(first_calls)), max(all_calls)
    checkpoints = np.unique(np.round(np.logspace(np.log10(lo), np.log10(hi), COMPARISON_POINTS)).astype(np.int64))

    table = ComparisonTable(
        labels=labels,
        checkpoints=[int(c) for c in checkpoints],
        values=[best_within_budget(results, checkpoints) for results in runs],
        target=target,
    )
    for label, results in zip(labels, runs):
        table.iterations_to_target[label] = iterations_to_reach(results, target)
    return table

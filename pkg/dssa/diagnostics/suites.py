"""
Verify Suites

Named acceptance suites run by ``dssa verify``. Each suite takes the master
seed and a worker count and returns a SuiteReport whose checks carry the
measured value, the acceptance band and the verdict.
"""

import csv
import io
import math
import time
from collections.abc import Callable

import numpy as np

from ..baselines.models import BaselineConfig
from ..exceptions import UnknownSuiteError
from ..experiments.models import ExperimentConfig, RunStatus
from ..experiments.service import run_experiment
from ..experiments.storage import recompute_calls_from_rows, run_summary, trace_to_csv
from ..extragradient.models import ExtragradientConfig
from ..hyperplane.models import BetaRule, BetaRuleKind, HyperplaneConfig
from ..logging import get_logger
from ..problems.models import AffineSviSpec, BlockConstraint, HolderSpec, NoiseLaw, SaddlePointSpec
from ..problems.service import build_problem
from ..projections.models import EXACT_KINDS, FeasibleSet, SetKind, box
from ..projections.service import natural_residual, project
from ..sampling.models import RngPlan, StreamTag, constant, log_rate, polynomial
from .models import CheckResult, DecayExperiment, DecayMode, SuiteReport
from .service import (
    check_gamma_trace,
    check_holder_continuity,
    check_oracle_accounting,
    check_pseudo_monotonicity,
    check_quasi_fejer,
    check_sigma_holder,
    check_solution_certificate,
    check_stepsize_trace,
    check_unbiasedness,
    fit_decay_slope,
    fit_rate_slope,
    measure_error_decay,
    residual_curve,
    stagnation_check,
)

logger = get_logger(__name__)

PROJECTION_INSTANCES = 1000
PROJECTION_TOLERANCE = 1e-9
RESIDUAL_RATIO_PAIRS = 100
DYADIC_GRID = [2.0**-i for i in range(10, -1, -1)]

DECAY_GRID = [100, 300, 1000, 3000, 10000]
DECAY_REPLICATIONS = 500

RATE_SEEDS = 20
RATE_WINDOW = (10, 200)
DIST_TARGET = 0.05
QUASI_FEJER_SEEDS = 50
QUASI_FEJER_HORIZON = 60
GAMMA_SEEDS = 20
GAMMA_HORIZON = 500
ROBUSTNESS_SEEDS = 5
# no stop test fires below this; runs span their whole horizon
UNREACHABLE_TOLERANCE = 1e-300

# wall-clock budgets in seconds at the default worker count
RUNTIME_BUDGETS = {
    "projections": 5.0,
    "decay_martingale": 30.0,
    "decay_correlated": 60.0,
    "rate": 120.0,
    "stepsize_bounds": 10.0,
    "gamma_bounds": 120.0,
    "robustness": 120.0,
}


# =============================================================================
# SHARED PROBLEMS
# =============================================================================

def decay_problem_spec(seed: int) -> AffineSviSpec:
    return AffineSviSpec(d=5, matrix_noise=0.3, vector_noise=0.3, seed=seed)


def rate_problem_spec(seed: int) -> AffineSviSpec:
    return AffineSviSpec(d=10, matrix_noise=0.1, vector_noise=0.1, noise_law=NoiseLaw.RADEMACHER,
                         feasible_set=box(-1.0, 1.0, 10), seed=seed)


def holder_problem_spec(seed: int) -> HolderSpec:
    return HolderSpec(d=5, exponent=0.5, modulus_spread=0.5, additive_noise=0.1, noise_law=NoiseLaw.RADEMACHER,
                      seed=seed)


def rate_solver(max_iterations: int = RATE_WINDOW[1] + 1) -> ExtragradientConfig:
    return ExtragradientConfig(schedule=log_rate(n=10, b=1.0, mu=3.0), max_iterations=max_iterations)


# =============================================================================
# PROJECTIONS
# =============================================================================

def random_set(kind: SetKind, rng: np.random.Generator) -> FeasibleSet:
    d = int(rng.integers(1, 9))
    if kind == SetKind.BOX:
        lower = rng.standard_normal(d) - rng.uniform(0.0, 1.0, d)
        upper = lower + rng.uniform(0.0, 2.0, d)
        return FeasibleSet(kind=kind, dimension=d, lower=lower.tolist(), upper=upper.tolist())
    if kind == SetKind.BALL:
        return FeasibleSet(kind=kind, dimension=d, radius=float(rng.uniform(0.1, 3.0)),
                           center=rng.standard_normal(d).tolist())
    if kind == SetKind.SIMPLEX:
        return FeasibleSet(kind=kind, dimension=d, scale=float(rng.uniform(0.1, 3.0)))
    if kind == SetKind.HALFSPACE:
        normal = rng.standard_normal(d)
        normal[0] += math.copysign(0.1, normal[0])
        return FeasibleSet(kind=kind, dimension=d, normal=normal.tolist(), offset=float(rng.standard_normal()))
    return FeasibleSet(kind=kind, dimension=d)


def projection_property_checks(kind: SetKind, rng: np.random.Generator,
                               instances: int = PROJECTION_INSTANCES) -> list[CheckResult]:
    """Obtuse-angle, nonexpansiveness, firm-nonexpansiveness and idempotence on random instances."""
    worst = {"obtuse": 0.0, "nonexpansive": 0.0, "firm": 0.0, "idempotent": 0.0}
    for _ in range(instances):
        feasible_set = random_set(kind, rng)
        d = feasible_set.dimension
        x, y = 3.0 * rng.standard_normal(d), 3.0 * rng.standard_normal(d)
        px, py = project(feasible_set, x), project(feasible_set, y)

        # ||P(x) - y'||^2 + ||P(x) - x||^2 <= ||x - y'||^2 for y' in X
        excess = np.sum((px - py) ** 2) + np.sum((px - x) ** 2) - np.sum((x - py) ** 2)
        worst["obtuse"] = max(worst["obtuse"], float(excess))
        worst["nonexpansive"] = max(worst["nonexpansive"], float(np.linalg.norm(px - py) - np.linalg.norm(x - y)))
        # <x' - y, x' - P(y)> >= ||x' - P(y)||^2 for x' in X
        gap = np.sum((px - py) ** 2) - float((px - y) @ (px - py))
        worst["firm"] = max(worst["firm"], float(gap))
        worst["idempotent"] = max(worst["idempotent"], float(np.linalg.norm(project(feasible_set, px) - px)))

    labels = {
        "obtuse": "||P(x)-y||^2 + ||P(x)-x||^2 <= ||x-y||^2",
        "nonexpansive": "||P(x)-P(y)|| <= ||x-y||",
        "firm": "<x-y, x-P(y)> >= ||x-P(y)||^2 for x in X",
        "idempotent": "P(P(x)) = P(x)",
    }
    return [
        CheckResult(name=f"{kind.value}: {labels[key]}", measured=value, band=f"excess <= {PROJECTION_TOLERANCE:g}",
                    passed=value <= PROJECTION_TOLERANCE, count=instances)
        for key, value in worst.items()
    ]


def residual_ratio_check(rng: np.random.Generator, pairs: int = RESIDUAL_RATIO_PAIRS) -> CheckResult:
    """alpha -> r_alpha / alpha is nonincreasing on a dyadic grid."""
    worst = 0.0
    for i in range(pairs):
        feasible_set = random_set(EXACT_KINDS[i % len(EXACT_KINDS)], rng)
        d = feasible_set.dimension
        x, h = 3.0 * rng.standard_normal(d), 3.0 * rng.standard_normal(d)
        ratios = np.array([natural_residual(feasible_set, h, x, alpha) / alpha for alpha in DYADIC_GRID])
        increase = np.max(ratios[1:] - ratios[:-1]) / (1.0 + ratios.max())
        worst = max(worst, float(increase))
    return CheckResult(name="r_alpha / alpha nonincreasing in alpha", measured=worst,
                       band="relative increase <= 1e-12", passed=worst <= 1e-12, count=pairs)


def suite_projections(seed: int, threads: int = 1) -> SuiteReport:
    report = SuiteReport(suite="projections", seed=seed)
    rng = RngPlan(seed).generator(0, StreamTag.VALIDATION)
    for kind in EXACT_KINDS:
        for check in projection_property_checks(kind, rng):
            report.add(check)
    report.add(residual_ratio_check(rng))
    return report


# =============================================================================
# ERROR DECAY
# =============================================================================

def _decay_report(suite: str, mode: DecayMode, seed: int, threads: int, band: tuple[float, float],
                  min_r_squared: float | None) -> SuiteReport:
    report = SuiteReport(suite=suite, seed=seed)
    problem = build_problem(decay_problem_spec(seed))
    experiment = DecayExperiment(
        problem=problem,
        anchor=np.ones(problem.dimension),
        grid=DECAY_GRID,
        replications=DECAY_REPLICATIONS,
        mode=mode,
    )
    points = measure_error_decay(experiment, RngPlan(seed), threads)
    fit = fit_decay_slope(points)
    report.data["points"] = [
        {"n": p.n, "estimate": p.estimate, "standard_error": p.standard_error, "expected": p.expected}
        for p in points
    ]
    report.data["r_squared"] = fit.r_squared

    lo, hi = band
    report.add(CheckResult(name="log-log slope of the empirical L2 error", measured=fit.slope,
                           band=f"[{lo}, {hi}]", passed=lo <= fit.slope <= hi, count=len(points)))
    if min_r_squared is not None:
        report.add(CheckResult(name="R^2 of the slope fit", measured=fit.r_squared, band=f">= {min_r_squared}",
                               passed=fit.r_squared >= min_r_squared))
    if mode == DecayMode.MARTINGALE:
        misses = [p for p in points if abs(p.estimate - p.expected) > 3.0 * p.standard_error]
        worst = max(abs(p.estimate - p.expected) / p.standard_error for p in points)
        report.add(CheckResult(name="estimate vs sigma_2(x)/sqrt(N)", measured=float(worst),
                               band="within 3 bootstrap SEs at every N", passed=not misses, count=len(points)))
    return report


def suite_decay_martingale(seed: int, threads: int = 1) -> SuiteReport:
    return _decay_report("decay_martingale", DecayMode.MARTINGALE, seed, threads, (-0.55, -0.45), None)


def suite_decay_correlated(seed: int, threads: int = 1) -> SuiteReport:
    return _decay_report("decay_correlated", DecayMode.CORRELATED, seed, threads, (-0.6, -0.4), 0.95)


# =============================================================================
# SOLVER TRACES
# =============================================================================

def suite_rate(seed: int, threads: int = 1) -> SuiteReport:
    report = SuiteReport(suite="rate", seed=seed)
    config = ExperimentConfig(name="rate", seed=seed, replications=RATE_SEEDS,
                              problem=rate_problem_spec(seed), solver=rate_solver())
    _, results = run_experiment(config, threads)

    fit = fit_rate_slope([residual_curve(r) for r in results], RATE_WINDOW, min_runs=RATE_SEEDS)
    report.add(CheckResult(name="slope of averaged min_i r(x^i)^2 vs k", measured=fit.slope, band="<= -0.8",
                           passed=fit.slope <= -0.8, count=RATE_WINDOW[1] - RATE_WINDOW[0] + 1))
    close = sum(int(r.final_dist is not None and r.final_dist <= DIST_TARGET) for r in results)
    required = math.ceil(0.9 * RATE_SEEDS)
    report.add(CheckResult(name=f"final dist(x, x*) <= {DIST_TARGET}", measured=float(close),
                           band=f">= {required} of {RATE_SEEDS} seeds", passed=close >= required, count=RATE_SEEDS))
    for result in results:
        report.add(check_oracle_accounting(result))
    report.add(quasi_fejer_check(seed, threads))
    report.data["final_dist"] = [r.final_dist for r in results]
    return report


def quasi_fejer_check(seed: int, threads: int = 1, replications: int = QUASI_FEJER_SEEDS,
                      horizon: int = QUASI_FEJER_HORIZON) -> CheckResult:
    """Seed-averaged squared distance on the rate problem over its own ensemble of short runs."""
    config = ExperimentConfig(name="quasi_fejer", seed=seed, replications=replications,
                              problem=rate_problem_spec(seed), solver=rate_solver(horizon))
    _, results = run_experiment(config, threads)
    return check_quasi_fejer(results)


def suite_stepsize_bounds(seed: int, threads: int = 1) -> SuiteReport:
    report = SuiteReport(suite="stepsize_bounds", seed=seed)
    solver = ExtragradientConfig(schedule=constant(16), max_iterations=500, track_modulus=True,
                                 residual_tolerance=1e-12)
    config = ExperimentConfig(name="stepsize_bounds", seed=seed, problem=decay_problem_spec(seed), solver=solver)
    _, (result,) = run_experiment(config, threads)
    report.add(CheckResult(name="run completed without an in-loop violation", measured=float(len(result.trace)),
                           band="status != aborted", passed=result.status != RunStatus.ABORTED,
                           detail=result.abort_reason))
    for check in check_stepsize_trace(result.trace, solver):
        report.add(check)
    return report


def gamma_solver(horizon: int = GAMMA_HORIZON) -> HyperplaneConfig:
    """N_k = ceil((k+1)^2.1): the cheapest polynomial growth with sum N_k^(-1/2) < inf."""
    return HyperplaneConfig(
        schedule=polynomial(n=1),
        beta_hat=0.5,
        beta_tilde=2.0,
        beta_rule=BetaRule(kind=BetaRuleKind.GEOMETRIC_CYCLE, ratio=2.0, period=3),
        max_iterations=horizon,
        residual_tolerance=UNREACHABLE_TOLERANCE,
    )


def gamma_bounds_report(seed: int, threads: int = 1, replications: int = GAMMA_SEEDS,
                        horizon: int = GAMMA_HORIZON) -> SuiteReport:
    report = SuiteReport(suite="gamma_bounds", seed=seed)
    solver = gamma_solver(horizon)
    config = ExperimentConfig(name="gamma_bounds", seed=seed, replications=replications,
                              problem=holder_problem_spec(seed), solver=solver)
    _, results = run_experiment(config, threads)

    aborted = [r.abort_reason for r in results if r.status == RunStatus.ABORTED]
    report.add(CheckResult(name="runs completed without an in-loop violation", measured=float(len(aborted)),
                           band="0 aborted", passed=not aborted, count=len(results),
                           detail="; ".join(aborted) or None))
    iterations = [r.totals.iterations for r in results]
    report.add(CheckResult(name=f"every run spans {horizon} iterations", measured=float(min(iterations)),
                           band=f"min iterations >= {horizon}", passed=min(iterations) >= horizon,
                           count=len(results)))
    trace = [record for r in results for record in r.trace]
    for check in check_gamma_trace(trace, solver):
        report.add(check)
    distances = [r.final_dist for r in results]
    median = float(np.median(distances))
    report.add(CheckResult(name="median final dist(x, x*)", measured=median, band=f"<= {DIST_TARGET}",
                           passed=median <= DIST_TARGET, count=len(results)))
    report.data["iterations"] = iterations
    return report


def suite_gamma_bounds(seed: int, threads: int = 1) -> SuiteReport:
    return gamma_bounds_report(seed, threads)


def suite_accounting(seed: int, threads: int = 1) -> SuiteReport:
    """Every method's cumulative calls match the trace and the CSV it writes."""
    report = SuiteReport(suite="accounting", seed=seed)
    spec = AffineSviSpec(d=4, matrix_noise=0.2, vector_noise=0.2, feasible_set=box(-2.0, 2.0, 4), seed=seed)
    solvers = [
        ExtragradientConfig(max_iterations=60),
        HyperplaneConfig(schedule=polynomial(n=1), max_iterations=40),
        BaselineConfig(method="constant_step", lipschitz=4.0, max_iterations=60),
        BaselineConfig(method="averaging_sa", step_scale=0.5, max_iterations=200),
    ]
    for solver in solvers:
        config = ExperimentConfig(name=f"accounting-{solver.method}", seed=seed, replications=3,
                                  problem=spec, solver=solver)
        _, results = run_experiment(config, threads)
        summary = run_summary(config, "accounting", results)
        for result, entry in zip(results, summary["runs"]):
            report.add(check_oracle_accounting(result))
            rows = list(csv.DictReader(io.StringIO(trace_to_csv(result))))
            recomputed = recompute_calls_from_rows(rows, solver.method)
            report.add(CheckResult(name=f"{solver.method}: summary vs CSV recomputation",
                                   measured=float(entry["oracle_calls_trace"] - recomputed),
                                   band="difference = 0", passed=entry["oracle_calls_trace"] == recomputed,
                                   count=len(rows)))
    return report


def suite_robustness(seed: int, threads: int = 1) -> SuiteReport:
    """Constant steps from a 100x underestimated L stall where the line search converges."""
    report = SuiteReport(suite="robustness", seed=seed)
    spec = rate_problem_spec(seed)
    problem = build_problem(spec)
    misestimated = problem.holder_modulus / 100.0

    baseline = ExperimentConfig(
        name="constant_step", seed=seed, replications=ROBUSTNESS_SEEDS, problem=spec,
        solver=BaselineConfig(method="constant_step", lipschitz=misestimated, max_iterations=RATE_WINDOW[1] + 1),
    )
    adaptive = ExperimentConfig(name="extragradient_ls", seed=seed, replications=ROBUSTNESS_SEEDS,
                                problem=spec, solver=rate_solver())
    _, baseline_runs = run_experiment(baseline, threads, problem)
    _, adaptive_runs = run_experiment(adaptive, threads, problem)

    stalled = sum(int(bool(stagnation_check(r))) for r in baseline_runs)
    report.add(CheckResult(name=f"constant_step with L={misestimated:.4g} stagnates over its last 100 iterations",
                           measured=float(stalled), band=f"{ROBUSTNESS_SEEDS} of {ROBUSTNESS_SEEDS} seeds",
                           passed=stalled == ROBUSTNESS_SEEDS, count=ROBUSTNESS_SEEDS))
    close = sum(int(r.final_dist is not None and r.final_dist <= DIST_TARGET) for r in adaptive_runs)
    required = math.floor(0.9 * ROBUSTNESS_SEEDS)
    report.add(CheckResult(name=f"extragradient_ls reaches dist(x, x*) <= {DIST_TARGET}", measured=float(close),
                           band=f">= {required} of {ROBUSTNESS_SEEDS} seeds", passed=close >= required,
                           count=ROBUSTNESS_SEEDS))
    report.data["constant_step_final_residual"] = [r.final_residual for r in baseline_runs]
    report.data["extragradient_final_residual"] = [r.final_residual for r in adaptive_runs]
    return report


def suite_problems(seed: int, threads: int = 1) -> SuiteReport:
    """Unbiasedness, Hölder data, pseudo-monotonicity and certificates of each family."""
    report = SuiteReport(suite="problems", seed=seed)
    specs = [
        AffineSviSpec(d=5, matrix_noise=0.2, vector_noise=0.2, feasible_set=box(-1.0, 1.0, 5), seed=seed),
        SaddlePointSpec(m=3, n=4, coupling_noise=0.1, linear_noise=0.1, seed=seed,
                        u_set=BlockConstraint(kind="simplex"), v_set=BlockConstraint(kind="simplex")),
        HolderSpec(d=4, exponent=0.5, modulus_spread=0.5, additive_noise=0.1, seed=seed),
    ]
    plan = RngPlan(seed)
    for lane, spec in enumerate(specs):
        problem = build_problem(spec)
        rng = plan.child(lane).generator(0, StreamTag.VALIDATION)
        anchor = project(problem.feasible_set, rng.standard_normal(problem.dimension))
        report.add(check_unbiasedness(problem, anchor, plan.child(lane, 1)))
        report.add(check_holder_continuity(problem, rng))
        report.add(check_sigma_holder(problem, plan.child(lane, 2)))
        report.add(check_pseudo_monotonicity(problem, rng))
        report.add(check_solution_certificate(problem))
    return report


SUITES: dict[str, Callable[[int, int], SuiteReport]] = {
    "projections": suite_projections,
    "decay_martingale": suite_decay_martingale,
    "decay_correlated": suite_decay_correlated,
    "rate": suite_rate,
    "stepsize_bounds": suite_stepsize_bounds,
    "gamma_bounds": suite_gamma_bounds,
    "accounting": suite_accounting,
    "robustness": suite_robustness,
    "problems": suite_problems,
}


def resolve_suites(name: str) -> list[str]:
    if name == "all":
        return list(SUITES)
    if name not in SUITES:
        raise UnknownSuiteError(name, list(SUITES))
    return [name]


def run_suite(name: str, seed: int = 0, threads: int = 1) -> SuiteReport:
    logger.info("Running verify suite %s (seed=%s, threads=%s)", name, seed, threads)
    started = time.perf_counter()
    report = SUITES[name](seed, threads)
    elapsed = time.perf_counter() - started
    report.data["elapsed_s"] = elapsed
    budget = RUNTIME_BUDGETS.get(name)
    if budget is not None:
        report.add(CheckResult(name="wall time", measured=elapsed, band=f"< {budget:g} s", passed=elapsed < budget))
    logger.info("Suite %s: %s (%s checks, %s evaluations)", name, "passed" if report.passed else "FAILED",
                len(report.checks), report.evaluations)
    return report

"""
Diagnostics Service

Monte Carlo measurement of empirical-error decay, log-log slope fitting, and
property checks over problems and solver traces.
"""

import math
from collections.abc import Sequence
from functools import partial
from typing import Optional

import numpy as np
from scipy import stats

from ..core.models import ProblemInstance
from ..core.service import BOOTSTRAP_LANE, empirical_mean, estimate_p_norm, estimate_sigma_p, evaluate_batch
from ..exceptions import AllZeroError, DiagnosticsError
from ..experiments.models import RunResult
from ..extragradient.models import ExtragradientConfig, IterationRecord
from ..extragradient.service import backtrack_bound, line_search
from ..hyperplane.models import HyperplaneConfig, HyperplaneRecord
from ..hyperplane.service import GAMMA_SLACK
from ..logging import get_logger
from ..projections.service import sample_feasible
from ..runtime.core import parallel_map
from ..sampling.models import RngPlan, StreamTag
from ..sampling.service import draw_batch
from .models import CheckResult, DecayExperiment, DecayMode, DecayPoint, SlopeFit

logger = get_logger(__name__)

STAGNANT_SLOPE = -0.1


# =============================================================================
# ERROR DECAY
# =============================================================================

def _measure_cell(experiment: DecayExperiment, plan: RngPlan, index: int) -> DecayPoint:
    problem = experiment.problem
    oracle, mean = problem.oracle, problem.mean
    n = experiment.grid[index]
    x = experiment.anchor
    norms = np.empty(experiment.replications)

    for r in range(experiment.replications):
        batch = draw_batch(oracle, plan.child(index, r), 0, StreamTag.XI, n)
        f_at_x = empirical_mean(oracle, batch, x)
        if experiment.mode == DecayMode.MARTINGALE:
            error = f_at_x - mean(x)
        else:
            search = line_search(oracle, problem.feasible_set, batch, x, f_at_x, experiment.line_search)
            error = search.f_at_z - mean(search.z)
        norms[r] = np.linalg.norm(error)

    rng = plan.child(index, BOOTSTRAP_LANE).generator(0, StreamTag.VALIDATION)
    estimate, se = estimate_p_norm(norms, experiment.p, rng)
    expected = None
    if experiment.mode == DecayMode.MARTINGALE and experiment.p == 2 and problem.noise_profile is not None:
        expected = problem.noise_profile(x) / math.sqrt(n)
    return DecayPoint(n=n, estimate=estimate, standard_error=se, expected=expected)


def measure_error_decay(experiment: DecayExperiment, plan: RngPlan, threads: int = 1) -> list[DecayPoint]:
    """Empirical p-norm of the oracle's empirical error at each batch size of the grid.

    Replication r at grid index i draws from ``plan.child(i, r)``, so the
    result does not depend on how cells are scheduled.
    """
    logger.info("Measuring %s error decay on %s over N=%s with R=%s",
                experiment.mode.value, experiment.problem.name, experiment.grid, experiment.replications)
    return parallel_map(partial(_measure_cell, experiment, plan), range(len(experiment.grid)), threads)


def _log_fit(x: np.ndarray, y: np.ndarray) -> SlopeFit:
    fit = stats.linregress(np.log(x), np.log(y))
    return SlopeFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
        standard_error=float(fit.stderr),
        n_points=int(x.size),
        stagnant=bool(fit.slope > STAGNANT_SLOPE),
    )


def fit_decay_slope(points: Sequence[DecayPoint]) -> SlopeFit:
    """Least-squares slope of log(estimate) against log(N)."""
    if len(points) < 4:
        raise DiagnosticsError(f"slope fits need at least 4 points, got {len(points)}")
    sizes = np.array([p.n for p in points], dtype=float)
    estimates = np.array([p.estimate for p in points], dtype=float)
    if np.any(estimates <= 0):
        raise AllZeroError("decay estimates contain zeros; the oracle is noiseless at this anchor")
    return _log_fit(sizes, estimates)


def residual_curve(result: RunResult) -> np.ndarray:
    """Squared natural residual per iteration, exact when the mean operator was known."""
    values = [r.residual_exact if r.residual_exact is not None else r.residual_est for r in result.trace]
    return np.asarray(values, dtype=float) ** 2


def fit_rate_slope(
    curves: Sequence[Sequence[float]],
    window: tuple[int, int] = (10, 200),
    min_runs: int = 20,
) -> SlopeFit:
    """Slope of log(seed-averaged min_{i<=k} r_i^2) against log(k) over ``window``.

    Runs that stopped early keep their last running minimum.
    """
    if len(curves) < min_runs:
        raise DiagnosticsError(f"need at least {min_runs} runs, got {len(curves)}")
    lo, hi = window
    if not 1 <= lo < hi:
        raise DiagnosticsError(f"invalid window {window}")
    running = []
    for curve in curves:
        curve = np.asarray(curve, dtype=float)
        if curve.size == 0:
            running.append(np.zeros(hi + 1))
            continue
        best = np.minimum.accumulate(curve)
        if best.size < hi + 1:
            best = np.concatenate([best, np.full(hi + 1 - best.size, best[-1])])
        running.append(best[: hi + 1])
    average = np.mean(np.stack(running), axis=0)
    ks = np.arange(lo, hi + 1)
    values = average[ks]
    if np.any(values <= 0):
        raise AllZeroError(f"averaged residuals vanish inside the window {window}")
    return _log_fit(ks.astype(float), values)


def is_stagnating(values: Sequence[float], window: int = 100, tolerance: float = 1e-3) -> bool:
    """True when log(values) over the last ``window`` entries does not decrease.

    Non-finite values count as divergence.
    """
    tail = np.asarray(values, dtype=float)[-window:]
    if tail.size < 2:
        return False
    if not np.all(np.isfinite(tail)) or np.any(tail <= 0):
        return not np.all(tail == 0)
    slope = stats.linregress(np.arange(tail.size), np.log(tail)).slope
    return bool(slope >= -tolerance)


# =============================================================================
# PROBLEM PROPERTY CHECKS
# =============================================================================

def check_unbiasedness(problem: ProblemInstance, x, plan: RngPlan, n_samples: int = 10_000,
                       z_limit: float = 4.0) -> CheckResult:
    """Componentwise z-scores of the batch mean against T(x)."""
    batch = draw_batch(problem.oracle, plan, 0, StreamTag.VALIDATION, n_samples)
    values = evaluate_batch(problem.oracle, batch, x)
    deviation = np.abs(np.mean(values, axis=0) - problem.mean(np.asarray(x, dtype=float)))
    se = np.std(values, axis=0, ddof=1) / math.sqrt(n_samples)
    scale = 1.0 + np.abs(values).max()
    exact = se <= 1e-13 * scale
    if np.any(exact & (deviation > 1e-12 * scale)):
        worst = math.inf
    else:
        worst = float(np.max(deviation[~exact] / se[~exact])) if np.any(~exact) else 0.0
    return CheckResult(name=f"{problem.name}: unbiasedness", measured=worst, band=f"max |z| < {z_limit}",
                       passed=worst < z_limit, count=problem.dimension)


def check_holder_continuity(problem: ProblemInstance, rng: np.random.Generator, n_pairs: int = 1000,
                            spread: float = 3.0) -> CheckResult:
    """||T(x) - T(y)|| <= L ||x - y||^delta on random feasible pairs; measured is the worst ratio."""
    if problem.holder_modulus is None:
        raise DiagnosticsError(f"{problem.name} declares no Hölder modulus")
    xs = sample_feasible(problem.feasible_set, n_pairs, rng, spread)
    ys = sample_feasible(problem.feasible_set, n_pairs, rng, spread)
    worst = 0.0
    for x, y in zip(xs, ys):
        gap = np.linalg.norm(x - y)
        if gap == 0.0:
            continue
        lhs = np.linalg.norm(problem.mean(x) - problem.mean(y))
        bound = problem.holder_modulus * gap**problem.holder_exponent
        worst = max(worst, lhs / bound if bound > 0 else (math.inf if lhs > 1e-12 else 0.0))
    return CheckResult(name=f"{problem.name}: Hölder continuity of T", measured=worst,
                       band="ratio <= 1 + 1e-9", passed=worst <= 1.0 + 1e-9, count=n_pairs)


def check_sigma_holder(problem: ProblemInstance, plan: RngPlan, n_pairs: int = 20, n_samples: int = 2000,
                       spread: float = 2.0) -> CheckResult:
    """|sigma_hat(x) - sigma_hat(y)| <= L_2 ||x - y||^delta + 6 (SE_x + SE_y)."""
    if problem.sigma_holder_modulus is None:
        raise DiagnosticsError(f"{problem.name} declares no moment Hölder modulus")
    rng = plan.generator(0, StreamTag.VALIDATION)
    xs = sample_feasible(problem.feasible_set, n_pairs, rng, spread)
    ys = sample_feasible(problem.feasible_set, n_pairs, rng, spread)
    worst = -math.inf
    for i, (x, y) in enumerate(zip(xs, ys)):
        sx = estimate_sigma_p(problem, x, 2.0, n_samples, plan.child(i, 0))
        sy = estimate_sigma_p(problem, y, 2.0, n_samples, plan.child(i, 1))
        allowed = (problem.sigma_holder_modulus * np.linalg.norm(x - y) ** problem.holder_exponent
                   + 6.0 * (sx.standard_error + sy.standard_error))
        worst = max(worst, abs(sx.value - sy.value) - allowed)
    return CheckResult(name=f"{problem.name}: Hölder continuity of sigma_2", measured=float(worst),
                       band="excess <= 0", passed=worst <= 1e-12, count=n_pairs)


def check_pseudo_monotonicity(problem: ProblemInstance, rng: np.random.Generator, n_pairs: int = 1000,
                              slack: float = 1e-12) -> CheckResult:
    """<T(x), z - x> >= slack implies <T(z), z - x> >= -slack on random feasible pairs."""
    xs = sample_feasible(problem.feasible_set, n_pairs, rng)
    zs = sample_feasible(problem.feasible_set, n_pairs, rng)
    violations = 0
    tested = 0
    for x, z in zip(xs, zs):
        if float(problem.mean(x) @ (z - x)) >= slack:
            tested += 1
            if float(problem.mean(z) @ (z - x)) < -slack:
                violations += 1
    return CheckResult(name=f"{problem.name}: pseudo-monotonicity", measured=float(violations),
                       band="0 violations", passed=violations == 0, count=n_pairs,
                       detail=f"{tested} pairs satisfied the antecedent")


def check_solution_certificate(problem: ProblemInstance, tolerance: float = 1e-9) -> CheckResult:
    measured = problem.solution_certificate
    return CheckResult(name=f"{problem.name}: solution certificate", measured=measured,
                       band=f"r(x*) <= {tolerance:g}",
                       passed=measured is not None and measured <= tolerance)


# =============================================================================
# TRACE CHECKS
# =============================================================================

def oracle_call_increment(method: str, n_k: int, ell_k: int) -> int:
    """Oracle calls charged to one iteration under each method's convention."""
    if method == "constant_step":
        return 2 * n_k
    if method == "averaging_sa":
        return 1
    return (1 + ell_k) * n_k


def recompute_oracle_calls(trace: Sequence[IterationRecord], method: str) -> list[int]:
    """Cumulative oracle calls rebuilt from (ell_k, N_k) alone."""
    total = 0
    cumulative = []
    for record in trace:
        total += oracle_call_increment(method, record.n_k, record.ell_k)
        cumulative.append(total)
    return cumulative


def check_oracle_accounting(result: RunResult) -> CheckResult:
    recomputed = recompute_oracle_calls(result.trace, result.method)
    mismatches = sum(int(a != r.oracle_calls_cum) for a, r in zip(recomputed, result.trace))
    total = (recomputed[-1] if recomputed else 0) + result.totals.stop_test_calls
    if total != result.totals.oracle_calls:
        mismatches += 1
    return CheckResult(name=f"{result.method}: oracle accounting", measured=float(mismatches),
                       band="0 mismatches", passed=mismatches == 0, count=len(result.trace) + 1)


def check_stepsize_trace(trace: Sequence[IterationRecord], config: ExtragradientConfig) -> list[CheckResult]:
    """Stepsize identity, lower bound from L_hat_k, and the backtrack bound at every iteration."""
    identity_failures = 0
    lower_failures = 0
    backtrack_failures = 0
    worst_margin = math.inf
    with_modulus = 0
    for record in trace:
        if record.alpha_k != config.alpha_hat * config.theta**record.ell_k:
            identity_failures += 1
        if record.modulus_mean is None:
            continue
        with_modulus += 1
        floor = min(config.lam * config.theta / record.modulus_mean, config.alpha_hat)
        worst_margin = min(worst_margin, record.alpha_k / floor)
        if not record.alpha_k >= floor:
            lower_failures += 1
        if config.theta < 1.0 and record.ell_k > backtrack_bound(record.modulus_mean, config):
            backtrack_failures += 1
    return [
        CheckResult(name="alpha_k = theta^ell_k * alpha_hat", measured=float(identity_failures),
                    band="0 failures", passed=identity_failures == 0, count=len(trace)),
        CheckResult(name="alpha_k >= (lam*theta/L_hat_k) ^ alpha_hat",
                    measured=None if with_modulus == 0 else float(worst_margin),
                    band="alpha_k / bound >= 1 at every iteration",
                    passed=lower_failures == 0 and with_modulus == len(trace), count=with_modulus),
        CheckResult(name="ell_k <= log_{1/theta}(alpha_hat L_hat_k / ((lam theta) ^ alpha_hat)) + 1",
                    measured=float(backtrack_failures), band="0 failures",
                    passed=backtrack_failures == 0 and with_modulus == len(trace), count=with_modulus),
    ]


def check_gamma_trace(trace: Sequence[HyperplaneRecord], config: HyperplaneConfig) -> list[CheckResult]:
    """0 < gamma_k < alpha_k beta_k / lam and positive separation at every iteration."""
    gamma_failures = 0
    separation_failures = 0
    beta_failures = 0
    worst = 0.0
    for record in trace:
        bound = record.alpha_k * record.beta_k / config.lam
        worst = max(worst, record.gamma_k / bound)
        if not 0.0 < record.gamma_k < bound + GAMMA_SLACK:
            gamma_failures += 1
        if not record.separation > 0.0:
            separation_failures += 1
        if not config.beta_hat <= record.beta_k <= config.beta_tilde:
            beta_failures += 1
    return [
        CheckResult(name="0 < gamma_k < alpha_k beta_k / lam", measured=worst,
                    band="gamma_k / bound < 1 + 1e-12", passed=gamma_failures == 0, count=len(trace)),
        CheckResult(name="<F_hat(xi, z_k), x_k - z_k> > 0", measured=float(separation_failures),
                    band="0 failures", passed=separation_failures == 0, count=len(trace)),
        CheckResult(name="beta_k in [beta_hat, beta_tilde]", measured=float(beta_failures),
                    band="0 failures", passed=beta_failures == 0, count=len(trace)),
    ]


def check_quasi_fejer(results: Sequence[RunResult], start: int = 5, slack: float = 0.05,
                      family_level: float = 0.01) -> CheckResult:
    """Seed-averaged ||x_k - x*||^2 is nonincreasing for k >= start, up to statistical slack.

    A step's mean increase across seeds may exceed ``slack`` times the current
    average only by z standard errors of that mean, z being the Bonferroni
    quantile of ``family_level`` over the window.
    """
    lengths = [len(r.trace) for r in results]
    horizon = min(lengths) if lengths else 0
    if horizon <= start + 1:
        return CheckResult(name="quasi-Fejér trend", measured=None, band="too few iterations",
                           passed=True, count=0)
    squared = np.array([[rec.dist_to_solution**2 for rec in r.trace[:horizon]] for r in results])[:, start:]
    steps = np.diff(squared, axis=1)
    runs, comparisons = steps.shape
    if runs > 1:
        standard_error = steps.std(axis=0, ddof=1) / math.sqrt(runs)
    else:
        standard_error = np.zeros(comparisons)
    z = float(stats.norm.ppf(1.0 - family_level / comparisons))
    excess = steps.mean(axis=0) - z * standard_error
    average = squared.mean(axis=0)[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(average > 0.0, excess / average, np.where(excess > 0.0, np.inf, 0.0))
    worst = float(relative.max())
    return CheckResult(name="quasi-Fejér trend", measured=worst,
                       band=f"relative increase beyond {z:.2f} SE <= {slack}",
                       passed=worst <= slack, count=comparisons)


def stagnation_check(result: RunResult, window: int = 100) -> Optional[bool]:
    if len(result.trace) < window:
        return None
    return is_stagnating(residual_curve(result), window)


__all__ = [
    "measure_error_decay",
    "fit_decay_slope",
    "fit_rate_slope",
    "residual_curve",
    "is_stagnating",
    "check_unbiasedness",
    "check_holder_continuity",
    "check_sigma_holder",
    "check_pseudo_monotonicity",
    "check_solution_certificate",
    "recompute_oracle_calls",
    "check_oracle_accounting",
    "check_stepsize_trace",
    "check_gamma_trace",
    "check_quasi_fejer",
    "stagnation_check",
]

"""
Tests for the hyperplane line-search method
"""

from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from dssa.core.models import OracleBatch
from dssa.exceptions import ConfigError
from dssa.experiments.models import RunStatus
from dssa.extragradient.models import Converged, LineSearchResult
from dssa.hyperplane.models import BetaRule, BetaRuleKind, HyperplaneConfig
from dssa.hyperplane.service import GAMMA_SLACK, hyperplane_line_search, hyperplane_solve, hyperplane_step
from dssa.problems.models import HolderSpec
from dssa.problems.service import make_holder
from dssa.projections.models import box, whole_space
from dssa.projections.service import project
from dssa.sampling.models import RngPlan, constant, log_rate, polynomial
from tests.conftest import LinearOracle, linear_problem


def _scalar_search(lam: float, x_k: float, operator: LinearOracle, feasible_set, beta: float):
    config = HyperplaneConfig(lam=lam, theta=0.5, alpha_hat=1.0, beta_hat=beta, beta_tilde=beta)
    batch = OracleBatch(samples=1, size=1)
    x = np.array([x_k])
    g = x - beta * operator.mean(x)
    return hyperplane_line_search(operator, feasible_set, batch, x, project(feasible_set, g), beta, config)


class TestConfig:

    def test_beta_bounds_ordered(self):
        with pytest.raises(ValidationError):
            HyperplaneConfig(beta_hat=2.0, beta_tilde=1.0)

    @pytest.mark.parametrize("field,value", [("lam", 1.0), ("theta", 1.0), ("alpha_hat", 1.5)])
    def test_parameter_ranges(self, field, value):
        with pytest.raises(ValidationError):
            HyperplaneConfig(**{field: value})

    def test_geometric_beta_cycle(self):
        config = HyperplaneConfig(beta_hat=0.5, beta_tilde=2.0,
                                  beta_rule=BetaRule(kind=BetaRuleKind.GEOMETRIC_CYCLE, ratio=2.0, period=4))
        assert [config.beta(k) for k in range(6)] == [0.5, 1.0, 2.0, 2.0, 0.5, 1.0]

    def test_constant_beta(self):
        assert HyperplaneConfig(beta_hat=0.7, beta_tilde=3.0).beta(11) == 0.7


class TestLineSearch:

    def test_identity_operator_half_lambda(self):
        """T(x) = x at x = 1, beta = 1: alpha <= 1 - lam gives alpha = 0.5 at lam = 0.5."""
        result = _scalar_search(0.5, 1.0, LinearOracle([[1.0]], [0.0]), whole_space(1), 1.0)
        assert result.alpha == 0.5
        assert result.ell == 1

    def test_identity_operator_large_lambda(self):
        result = _scalar_search(0.9, 1.0, LinearOracle([[1.0]], [0.0]), whole_space(1), 1.0)
        assert result.alpha == 0.0625
        assert result.ell == 4

    def test_constant_operator_on_box(self):
        """T = 1 on [0, 1] at x = 1 with beta = 0.5 passes at alpha_hat."""
        result = _scalar_search(0.5, 1.0, LinearOracle([[0.0]], [1.0]), box(0.0, 1.0, 1), 0.5)
        assert result.alpha == 1.0
        assert result.ell == 0


class TestStep:

    def test_identity_operator_update(self, plan):
        """gamma = <F(z), x - z> / ||F(z)||^2 = 1 and x+ = 0.5."""
        problem = linear_problem([[1.0]], [0.0], solution=[0.0])
        config = HyperplaneConfig(lam=0.5, theta=0.5, schedule=constant(1))
        x_next, record = hyperplane_step(problem.oracle, problem.feasible_set, plan, 0, np.array([1.0]),
                                         config, problem=problem)
        assert record.gamma_k == pytest.approx(1.0)
        assert record.gamma_k < record.alpha_k * record.beta_k / config.lam + GAMMA_SLACK
        assert record.separation == pytest.approx(0.25)
        np.testing.assert_allclose(x_next, [0.5])
        assert record.oracle_calls_cum == 2
        assert record.evaluations == 3

    def test_gamma_strictly_below_bound_near_half_lambda(self, plan):
        """lam = 0.49: alpha = 0.5 and gamma = 1 < 0.5 / 0.49 with no slack."""
        problem = linear_problem([[1.0]], [0.0], solution=[0.0])
        config = HyperplaneConfig(lam=0.49, theta=0.5, schedule=constant(1))
        _, record = hyperplane_step(problem.oracle, problem.feasible_set, plan, 0, np.array([1.0]),
                                    config, problem=problem)
        bound = record.alpha_k * record.beta_k / config.lam
        assert record.alpha_k == 0.5
        assert record.gamma_k == pytest.approx(1.0)
        assert bound == pytest.approx(0.5 / 0.49)
        assert record.gamma_k < bound

    def test_converged_at_solution(self, shifted_identity, plan):
        outcome = hyperplane_step(shifted_identity.oracle, shifted_identity.feasible_set, plan, 0,
                                  shifted_identity.solution, HyperplaneConfig())
        assert isinstance(outcome, Converged)

    def test_vanishing_operator_aborts(self, plan):
        problem = linear_problem([[1.0]], [0.0])
        config = HyperplaneConfig(schedule=polynomial(n=1), max_iterations=5)
        degenerate = LineSearchResult(alpha=1.0, z=np.array([0.0]), ell=0, f_at_z=np.array([0.0]))
        with patch("dssa.hyperplane.service.hyperplane_line_search", return_value=degenerate):
            result = hyperplane_solve(problem, config, plan)
        assert result.status == RunStatus.ABORTED
        assert "F_hat" in result.abort_reason


class TestSolve:

    def test_schedule_must_be_sqrt_summable(self, shifted_identity, plan):
        with pytest.raises(ConfigError):
            hyperplane_solve(shifted_identity, HyperplaneConfig(schedule=log_rate()), plan)

    def test_zero_budget(self, shifted_identity, plan):
        result = hyperplane_solve(shifted_identity, HyperplaneConfig(oracle_budget=0), plan)
        assert result.status == RunStatus.BUDGET_EXHAUSTED
        assert result.trace == []

    def test_start_at_solution(self, shifted_identity, plan):
        result = hyperplane_solve(shifted_identity, HyperplaneConfig(), plan, x0=list(shifted_identity.solution))
        assert result.status == RunStatus.CONVERGED
        assert result.trace == []

    def test_holder_problem_trace_invariants(self):
        """gamma bounds, positive separation and call accounting on a delta = 1/2 problem."""
        problem = make_holder(HolderSpec(d=2, exponent=0.5, modulus_spread=0.3, seed=1))
        config = HyperplaneConfig(schedule=polynomial(n=1), max_iterations=40, oracle_budget=200_000,
                                  beta_hat=0.5, beta_tilde=2.0,
                                  beta_rule=BetaRule(kind=BetaRuleKind.GEOMETRIC_CYCLE, period=3))
        result = hyperplane_solve(problem, config, RngPlan(21))
        assert result.status != RunStatus.ABORTED
        assert result.trace
        total = 0
        for record in result.trace:
            assert 0.0 < record.gamma_k < record.alpha_k * record.beta_k / config.lam + GAMMA_SLACK
            assert record.separation > 0.0
            assert record.alpha_k == config.alpha_hat * config.theta**record.ell_k
            assert config.beta_hat <= record.beta_k <= config.beta_tilde
            total += (1 + record.ell_k) * record.n_k
            assert record.oracle_calls_cum == total
        assert result.final_dist < result.trace[0].dist_to_solution

    def test_noise_free_holder_problem_converges(self):
        """delta = 1/2 in R^5 without noise reaches dist(x, x*) <= 1e-3 within 500 iterations."""
        problem = make_holder(HolderSpec(d=5, exponent=0.5, seed=3))
        config = HyperplaneConfig(schedule=polynomial(n=1), max_iterations=500)
        result = hyperplane_solve(problem, config, RngPlan(9))
        assert result.status != RunStatus.ABORTED
        assert result.final_dist <= 1e-3
        assert len(result.trace) <= 500

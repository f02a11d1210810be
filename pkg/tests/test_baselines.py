"""
Tests for the constant-step and averaging baselines
"""

import numpy as np
import pytest
from pydantic import ValidationError

from dssa.baselines.models import BaselineConfig
from dssa.baselines.service import averaging_sa_solve, constant_step_solve
from dssa.diagnostics.service import check_oracle_accounting
from dssa.experiments.models import RunStatus
from dssa.sampling.models import RngPlan, constant


class TestConstantStep:

    def test_lipschitz_required(self):
        with pytest.raises(ValidationError):
            BaselineConfig(method="constant_step")

    @pytest.mark.parametrize("lipschitz,expected", [(0.25, 1.0), (1.0, 0.5), (10.0, 0.05)])
    def test_alpha_is_capped(self, lipschitz, expected):
        assert BaselineConfig(lipschitz=lipschitz).constant_alpha == pytest.approx(expected)

    def test_deterministic_contraction(self, shifted_identity, plan):
        """alpha = 1/2 on T(x) = x - x*: each step scales the error by 1 - alpha + alpha^2 = 0.75."""
        config = BaselineConfig(lipschitz=1.0, schedule=constant(2), max_iterations=3)
        result = constant_step_solve(shifted_identity, config, plan, x0=0.0)
        errors = [r.dist_to_solution for r in result.trace]
        assert errors[1] == pytest.approx(0.75 * errors[0])
        assert errors[2] == pytest.approx(0.75 * errors[1])
        assert result.final_dist == pytest.approx(0.75 * errors[2])

    def test_two_batches_per_iteration(self, noisy_shift, plan):
        config = BaselineConfig(lipschitz=1.0, schedule=constant(5), max_iterations=10)
        result = constant_step_solve(noisy_shift, config, plan)
        assert [r.oracle_calls_cum for r in result.trace] == [10 * (k + 1) for k in range(10)]
        assert all(r.alpha_k == 0.5 and r.ell_k == 0 for r in result.trace)
        assert check_oracle_accounting(result).passed

    def test_converges_on_noise_free_problem(self, shifted_identity, plan):
        result = constant_step_solve(shifted_identity, BaselineConfig(lipschitz=1.0, max_iterations=500), plan)
        assert result.status == RunStatus.CONVERGED
        assert result.final_dist <= 1e-6

    def test_budget_counts_both_batches(self, shifted_identity, plan):
        """Two batches of 3 per step: a second step would end at 12 > 10."""
        config = BaselineConfig(lipschitz=1.0, schedule=constant(3), oracle_budget=10, max_iterations=10)
        result = constant_step_solve(shifted_identity, config, plan)
        assert result.status == RunStatus.BUDGET_EXHAUSTED
        assert len(result.trace) == 1
        assert result.totals.oracle_calls == 6


class TestAveragingSa:

    def test_zero_step_keeps_start(self, noisy_shift, plan):
        config = BaselineConfig(method="averaging_sa", step_scale=0.0, max_iterations=20)
        result = averaging_sa_solve(noisy_shift, config, plan, x0=2.0)
        for record in result.trace:
            np.testing.assert_array_equal(record.x_k, [2.0, 2.0])
            np.testing.assert_array_equal(record.x_avg, [2.0, 2.0])
        np.testing.assert_array_equal(result.final_point, [2.0, 2.0])

    def test_residuals_measured_where_documented(self, shifted_identity, plan):
        """Noise-free: residual_est sits at x_k, residual_exact at x_avg."""
        config = BaselineConfig(method="averaging_sa", step_scale=0.5, max_iterations=5)
        result = averaging_sa_solve(shifted_identity, config, plan, x0=0.0)
        target = shifted_identity.solution
        for record in result.trace[1:]:
            assert not np.allclose(record.x_k, record.x_avg)
            assert record.residual_est == pytest.approx(np.linalg.norm(record.x_k - target))
            assert record.residual_exact == pytest.approx(np.linalg.norm(record.x_avg - target))
            assert record.dist_to_solution == pytest.approx(np.linalg.norm(record.x_avg - target))

    def test_one_call_per_iteration(self, noisy_shift, plan):
        config = BaselineConfig(method="averaging_sa", max_iterations=25)
        result = averaging_sa_solve(noisy_shift, config, plan)
        assert [r.oracle_calls_cum for r in result.trace] == list(range(1, 26))
        assert result.status == RunStatus.BUDGET_EXHAUSTED
        assert result.totals.oracle_calls == 25

    def test_oracle_budget_counts_samples(self, noisy_shift, plan):
        config = BaselineConfig(method="averaging_sa", max_iterations=100, oracle_budget=7)
        assert len(averaging_sa_solve(noisy_shift, config, plan).trace) == 7

    def test_stepsizes_decay(self, noisy_shift, plan):
        config = BaselineConfig(method="averaging_sa", step_scale=2.0, max_iterations=4)
        alphas = [r.alpha_k for r in averaging_sa_solve(noisy_shift, config, plan).trace]
        np.testing.assert_allclose(alphas, [2.0 / np.sqrt(k + 1.0) for k in range(4)])

    def test_average_approaches_solution(self, noisy_shift):
        config = BaselineConfig(method="averaging_sa", max_iterations=2000)
        result = averaging_sa_solve(noisy_shift, config, RngPlan(31))
        assert result.final_dist < 0.2

    def test_identical_seeds(self, noisy_shift):
        config = BaselineConfig(method="averaging_sa", max_iterations=50)
        first = averaging_sa_solve(noisy_shift, config, RngPlan(4))
        second = averaging_sa_solve(noisy_shift, config, RngPlan(4))
        np.testing.assert_array_equal(first.final_point, second.final_point)

"""
Tests for the empirical mean operator, oracle errors and moment estimates
"""

import numpy as np
import pytest

from dssa.core.models import MeanOperator, OracleBatch, ProblemInstance
from dssa.core.service import (
    bootstrap_standard_error,
    empirical_mean,
    estimate_p_norm,
    estimate_sigma_p,
    evaluate_batch,
    oracle_error,
    p_norm_statistic,
)
from dssa.exceptions import DimensionMismatchError
from dssa.problems.models import AffineSviSpec
from dssa.problems.service import make_affine
from dssa.projections.models import whole_space
from dssa.sampling.models import RngPlan, StreamTag
from dssa.sampling.service import draw_batch
from tests.conftest import GaussianShiftOracle, LinearOracle


class TestEmpiricalMean:

    def test_constant_operator(self):
        """F(xi, x) = c for every sample returns c."""
        oracle = LinearOracle(np.zeros((2, 2)), [3.0, -1.0])
        batch = OracleBatch(samples=17, size=17)
        np.testing.assert_array_equal(empirical_mean(oracle, batch, [5.0, 5.0]), [3.0, -1.0])

    def test_single_sample_is_exact(self):
        oracle = GaussianShiftOracle(np.zeros(2), sigma=1.0)
        batch = draw_batch(oracle, RngPlan(3), 0, StreamTag.XI, 1)
        x = np.array([0.2, 0.4])
        np.testing.assert_array_equal(empirical_mean(oracle, batch, x), x + batch.samples[0])

    def test_wrong_point_dimension(self):
        oracle = LinearOracle(np.eye(2), [0.0, 0.0])
        with pytest.raises(DimensionMismatchError):
            empirical_mean(oracle, OracleBatch(samples=3, size=3), [1.0, 2.0, 3.0])

    def test_wrong_output_shape(self):
        class Broken(LinearOracle):
            def evaluate(self, samples, x):
                return np.zeros((samples, 5))

        with pytest.raises(DimensionMismatchError):
            evaluate_batch(Broken(np.eye(2), [0.0, 0.0]), OracleBatch(samples=3, size=3), [0.0, 0.0])


class TestOracleError:

    def test_deterministic_oracle_has_zero_error(self):
        oracle = LinearOracle(np.eye(2), [1.0, 1.0])
        errors = oracle_error(oracle, MeanOperator(oracle.mean), OracleBatch(samples=4, size=4), [0.5, 0.5])
        assert errors.shape == (4, 2)
        assert not np.any(errors)

    def test_multiplicative_noise_scales_with_x(self):
        """With eta_b = 0, the spread of ||eps|| doubles when ||x|| doubles."""
        problem = make_affine(AffineSviSpec(d=3, matrix_noise=0.5, seed=1))
        batch = draw_batch(problem.oracle, RngPlan(11), 0, StreamTag.VALIDATION, 10_000)
        x = np.array([1.0, -1.0, 0.5])
        small = np.linalg.norm(oracle_error(problem.oracle, problem.mean, batch, x), axis=1)
        large = np.linalg.norm(oracle_error(problem.oracle, problem.mean, batch, 2.0 * x), axis=1)
        np.testing.assert_allclose(np.std(large), 2.0 * np.std(small), rtol=1e-9)


class TestMomentEstimates:

    def test_zero_noise_is_exactly_zero(self, shifted_identity):
        estimate = estimate_sigma_p(shifted_identity, np.zeros(3), 2.0, 500, RngPlan(0))
        assert estimate.value == 0.0
        assert estimate.standard_error == 0.0

    def test_isotropic_gaussian_second_moment(self):
        """sigma_2 of N(0, s^2 I_d) noise is s sqrt(d), within 3 bootstrap SEs."""
        oracle = GaussianShiftOracle(np.zeros(4), sigma=0.7)
        problem = ProblemInstance(name="gauss", oracle=oracle, feasible_set=whole_space(4),
                                  mean=MeanOperator(oracle.mean))
        estimate = estimate_sigma_p(problem, np.ones(4), 2.0, 20_000, RngPlan(8))
        assert abs(estimate.value - 0.7 * 2.0) <= 3.0 * estimate.standard_error
        assert estimate.standard_error > 0.0

    def test_rejects_low_order(self, noisy_shift):
        with pytest.raises(ValueError):
            estimate_sigma_p(noisy_shift, np.zeros(2), 1.5, 500, RngPlan(0))

    def test_rejects_small_samples(self, noisy_shift):
        with pytest.raises(ValueError):
            estimate_sigma_p(noisy_shift, np.zeros(2), 2.0, 50, RngPlan(0))

    def test_p_norm_of_constant_norms(self, rng):
        value, se = estimate_p_norm(np.full(100, 2.0), 4.0, rng)
        assert value == pytest.approx(2.0)
        assert se == 0.0

    def test_bootstrap_standard_error_matches_mean_se(self, rng):
        values = rng.standard_normal(2000)
        se = bootstrap_standard_error(values, p_norm_statistic(1.0), rng)
        assert se == pytest.approx(1.0 / np.sqrt(2000), rel=0.3)

    def test_reproducible_with_plan(self, noisy_shift):
        first = estimate_sigma_p(noisy_shift, np.zeros(2), 2.0, 1000, RngPlan(5))
        second = estimate_sigma_p(noisy_shift, np.zeros(2), 2.0, 1000, RngPlan(5))
        assert first == second

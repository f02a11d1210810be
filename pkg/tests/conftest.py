"""
Shared fixtures: small deterministic oracles and problem instances.
"""

import numpy as np
import pytest

from dssa.core.models import MeanOperator, ProblemInstance, StochasticOracle
from dssa.projections.models import FeasibleSet, whole_space
from dssa.sampling.models import RngPlan


class LinearOracle(StochasticOracle):
    """Noise-free F(xi, x) = M x + c; samples are just the batch size."""

    def __init__(self, matrix, offset):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.offset = np.asarray(offset, dtype=float).reshape(-1)
        self.dimension = self.offset.size

    def sample(self, rng, size):
        return size

    def evaluate(self, samples, x):
        return np.tile(self.matrix @ x + self.offset, (samples, 1))

    def mean(self, x):
        return self.matrix @ x + self.offset


class GaussianShiftOracle(StochasticOracle):
    """F(xi, x) = x - target + sigma * xi with xi ~ N(0, I)."""

    def __init__(self, target, sigma: float):
        self.target = np.asarray(target, dtype=float)
        self.sigma = float(sigma)
        self.dimension = self.target.size

    def sample(self, rng, size):
        return rng.standard_normal((size, self.dimension))

    def evaluate(self, samples, x):
        return (x - self.target) + self.sigma * samples

    def mean(self, x):
        return x - self.target


def linear_problem(matrix, offset, feasible_set: FeasibleSet | None = None, solution=None) -> ProblemInstance:
    oracle = LinearOracle(matrix, offset)
    return ProblemInstance(
        name="linear",
        oracle=oracle,
        feasible_set=feasible_set or whole_space(oracle.dimension),
        mean=MeanOperator(oracle.mean),
        solution=None if solution is None else np.asarray(solution, dtype=float),
    )


@pytest.fixture
def plan():
    return RngPlan(12345)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def shifted_identity():
    """T(x) = x - x* on R^3 with x* = (1, -2, 0.5), noise-free."""
    target = np.array([1.0, -2.0, 0.5])
    return linear_problem(np.eye(3), -target, solution=target)


@pytest.fixture
def noisy_shift():
    target = np.array([0.5, -0.5])
    oracle = GaussianShiftOracle(target, sigma=0.5)
    return ProblemInstance(
        name="gaussian-shift",
        oracle=oracle,
        feasible_set=whole_space(2),
        mean=MeanOperator(oracle.mean),
        solution=target,
        noise_profile=lambda x: 0.5 * np.sqrt(2.0),
    )

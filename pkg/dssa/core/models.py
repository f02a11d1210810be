"""
Problem Core Models

The SVI abstraction: a random operator F(xi, x) behind a stochastic oracle,
its expectation T, the feasible set X and optional ground truth.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray

from ..logging import get_logger
from ..projections.models import FeasibleSet
from ..sampling.models import StreamTag

logger = get_logger(__name__)

Vector = NDArray[np.float64]
# stacked evaluations, one row per sample
Matrix = NDArray[np.float64]

SOLUTION_CERTIFICATE_TOLERANCE = 1e-9


def frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


class StochasticOracle(ABC):
    """Samples xi from P and evaluates F(xi, x) for whole batches at once.

    Samples are opaque to the solvers. Evaluation must be a pure function of
    (samples, x); the oracle holds no mutable state.
    """

    dimension: int

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> Any:
        """Draw ``size`` i.i.d. samples from ``rng`` in one vectorized call."""

    @abstractmethod
    def evaluate(self, samples: Any, x: Vector) -> Matrix:
        """Return F(xi_j, x) stacked into an array of shape (N, d)."""

    def batch_mean(self, samples: Any, x: Vector) -> Optional[Vector]:
        """F_hat(xi^N, x) from averages kept at sampling time; None reduces the stacked rows."""
        return None

    def modulus(self, samples: Any) -> Optional[NDArray[np.float64]]:
        """Per-sample Hölder modulus L(xi_j), when the oracle exposes it."""
        return None


@dataclass(frozen=True)
class OracleBatch:
    samples: Any
    size: int
    k: int = 0
    tag: StreamTag = StreamTag.XI


@dataclass(frozen=True)
class MeanOperator:
    """The exact expected operator T(x) = E F(xi, x)."""
    operator: Callable[[Vector], Vector]

    def __call__(self, x: Vector) -> Vector:
        return np.asarray(self.operator(x), dtype=float)


@dataclass(frozen=True)
class ProblemInstance:
    """An SVI with optional ground truth used by tests and experiments.

    ``noise_profile`` is the closed-form sigma_2(x) = (E||eps(xi, x)||^2)^(1/2).
    ``holder_modulus`` / ``holder_exponent`` declare ||T(x) - T(y)|| <= L ||x - y||^delta
    and ``sigma_holder_modulus`` declares the same for sigma_2.
    """
    name: str
    oracle: StochasticOracle
    feasible_set: FeasibleSet
    mean: Optional[MeanOperator] = None
    solution: Optional[Vector] = None
    holder_exponent: float = 1.0
    holder_modulus: Optional[float] = None
    noise_profile: Optional[Callable[[Vector], float]] = None
    sigma_holder_modulus: Optional[float] = None
    solution_certificate: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.oracle.dimension != self.feasible_set.dimension:
            raise ValueError(
                f"oracle dimension {self.oracle.dimension} does not match set dimension {self.feasible_set.dimension}"
            )
        if not 0 < self.holder_exponent <= 1:
            raise ValueError("holder_exponent must lie in (0, 1]")
        if self.solution_certificate is not None and self.solution_certificate > SOLUTION_CERTIFICATE_TOLERANCE:
            logger.warning("Problem %s: solution certificate %.3e exceeds %.0e",
                           self.name, self.solution_certificate, SOLUTION_CERTIFICATE_TOLERANCE)

    @property
    def dimension(self) -> int:
        return self.oracle.dimension


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo estimate of (E||eps||^p)^(1/p) with its bootstrap standard error."""
    value: float
    standard_error: float
    p: float
    n_samples: int

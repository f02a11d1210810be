"""
Experiment Models

Run results shared by every solver, and the experiment configuration parsed
from TOML files.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Annotated, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..baselines.models import BaselineConfig
from ..extragradient.models import ExtragradientConfig, IterationRecord
from ..hyperplane.models import HyperplaneConfig
from ..problems.models import AffineSviSpec, HolderSpec, SaddlePointSpec


class RunStatus(str, Enum):
    CONVERGED = "converged"
    BUDGET_EXHAUSTED = "budget_exhausted"
    ABORTED = "aborted"


@dataclass
class RunTotals:
    """Aggregate counts of a run.

    ``oracle_calls`` = sum over the trace of (1 + ell_i) N_i plus
    ``stop_test_calls``, the batch consumed by the iteration whose stop test
    fired. ``sample_evaluations`` counts every single-sample evaluation.
    """
    iterations: int = 0
    oracle_calls: int = 0
    stop_test_calls: int = 0
    sample_evaluations: int = 0
    wall_ns: Optional[int] = None


@dataclass
class RunResult:
    method: str
    status: RunStatus
    final_point: np.ndarray
    trace: list[IterationRecord] = field(default_factory=list)
    totals: RunTotals = field(default_factory=RunTotals)
    abort_reason: Optional[str] = None
    final_residual: Optional[float] = None
    final_dist: Optional[float] = None

    @property
    def best_residual_sq(self) -> Optional[float]:
        """min_i r(x^i)^2 over the trace, exact residual when available."""
        values = [r.residual_exact if r.residual_exact is not None else r.residual_est for r in self.trace]
        if not values:
            return None
        return float(min(values) ** 2)


# =============================================================================
# EXPERIMENT CONFIGURATION
# =============================================================================

ProblemSpec = Annotated[Union[AffineSviSpec, SaddlePointSpec, HolderSpec], Field(discriminator="family")]
SolverSpec = Annotated[
    Union[ExtragradientConfig, HyperplaneConfig, BaselineConfig],
    Field(discriminator="method"),
]


class ExperimentConfig(BaseModel):
    """One experiment: a problem, a method and the replication plan."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field("experiment", min_length=1, description="Label used for output files")
    seed: int = Field(0, ge=0, lt=2**64, description="RNG master seed")
    replications: int = Field(1, ge=1, description="Independent seeded runs")
    output: Optional[str] = Field(None, description="Output directory")
    x0: Union[float, list[float]] = Field(1.0, description="Initial point (scalar broadcasts), projected onto X")
    problem: ProblemSpec
    solver: SolverSpec

    @model_validator(mode="after")
    def validate_start(self):
        if isinstance(self.x0, list) and len(self.x0) != self.problem.dimension:
            raise ValueError(f"x0 has length {len(self.x0)}, problem dimension is {self.problem.dimension}")
        return self

    @property
    def method(self) -> str:
        return self.solver.method

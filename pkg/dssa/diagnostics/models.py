"""
Diagnostics Models

Monte Carlo decay experiments, slope fits and the check/report types emitted
by verify suites.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..core.models import ProblemInstance
from ..extragradient.models import ExtragradientConfig

MIN_GRID_POINTS = 4
MIN_REPLICATIONS = 200


class DecayMode(str, Enum):
    # eps_hat(xi^N, x) at a fixed anchor
    MARTINGALE = "martingale"
    # eps_hat(xi^N, z) with z from the line search on the same batch
    CORRELATED = "correlated"


@dataclass
class DecayExperiment:
    problem: ProblemInstance
    anchor: np.ndarray
    grid: list[int]
    replications: int = MIN_REPLICATIONS
    mode: DecayMode = DecayMode.MARTINGALE
    p: float = 2.0
    line_search: ExtragradientConfig = field(default_factory=ExtragradientConfig)

    def __post_init__(self):
        if len(self.grid) < MIN_GRID_POINTS:
            raise ValueError(f"decay grids need at least {MIN_GRID_POINTS} sizes, got {len(self.grid)}")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])) or self.grid[0] < 1:
            raise ValueError("decay grid must be strictly increasing positive sizes")
        if self.replications < MIN_REPLICATIONS:
            raise ValueError(f"need at least {MIN_REPLICATIONS} replications, got {self.replications}")
        if self.p < 2:
            raise ValueError("moment order p must be at least 2")
        if self.problem.mean is None:
            raise ValueError("decay experiments need the exact mean operator")
        if self.mode == DecayMode.CORRELATED and self.problem.holder_exponent != 1.0:
            raise ValueError("correlated mode mimics the extragradient line search and needs a Lipschitz problem")


@dataclass(frozen=True)
class DecayPoint:
    n: int
    estimate: float
    standard_error: float
    expected: Optional[float] = None


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    standard_error: float
    n_points: int
    # fitted slope too flat to call the data converging
    stagnant: bool = False


class CheckResult(BaseModel):
    """One acceptance check: what was measured, the band it had to meet, and the verdict."""
    name: str = Field(..., description="Check identifier")
    measured: Optional[float] = Field(None, description="Worst or fitted value")
    band: str = Field(..., description="Acceptance band, human readable")
    passed: bool
    count: int = Field(1, ge=0, description="Number of individual property evaluations")
    detail: Optional[str] = None


class SuiteReport(BaseModel):
    suite: str
    seed: int
    checks: list[CheckResult] = Field(default_factory=list)
    data: dict[str, Any] = Field(default_factory=dict, description="Supporting measurements")

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def evaluations(self) -> int:
        return sum(check.count for check in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

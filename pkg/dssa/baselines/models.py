"""
Baseline Models

Reference stepsize policies: extragradient with a fixed alpha = O(1/L) under
dynamic sampling, and one-sample SA with O(1/sqrt(k)) steps and ergodic
averaging.
"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import Field, model_validator

from ..extragradient.models import IterationRecord, SolverBudget
from ..sampling.models import SampleSchedule, log_rate


class BaselineConfig(SolverBudget):
    method: Literal["constant_step", "averaging_sa"] = "constant_step"
    lipschitz: Optional[float] = Field(None, description="Assumed Lipschitz constant L (constant_step)")
    alpha_hat: float = Field(1.0, gt=0, le=1, description="Stepsize cap (constant_step)")
    step_scale: float = Field(1.0, ge=0, description="c in alpha_k = c / sqrt(k + 1) (averaging_sa)")
    schedule: SampleSchedule = Field(default_factory=log_rate, description="Batch-size schedule (constant_step)")

    @model_validator(mode="after")
    def validate_kind(self):
        if self.method == "constant_step" and (self.lipschitz is None or not self.lipschitz > 0):
            raise ValueError("constant_step needs lipschitz > 0")
        return self

    @property
    def constant_alpha(self) -> float:
        return min(self.alpha_hat, 1.0 / (2.0 * self.lipschitz))


@dataclass
class AveragingRecord(IterationRecord):
    """Record of the averaging baseline.

    ``residual_exact`` and ``dist_to_solution`` are measured at ``x_avg``;
    ``residual_est`` is the one-sample residual at the SA iterate ``x_k``.
    """
    x_avg: Optional[np.ndarray] = None

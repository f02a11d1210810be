"""
Hyperplane Line-Search Models
"""

from dataclasses import dataclass
from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..extragradient.models import IterationRecord, SolverBudget
from ..sampling.models import SampleSchedule, polynomial


class BetaRuleKind(str, Enum):
    CONSTANT = "constant"
    GEOMETRIC_CYCLE = "geometric_cycle"


class BetaRule(BaseModel):
    """k -> beta_k in [beta_hat, beta_tilde].

    geometric_cycle: beta_k = min(beta_tilde, beta_hat * ratio^(k mod period)).
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: BetaRuleKind = BetaRuleKind.CONSTANT
    ratio: float = Field(2.0, gt=1.0)
    period: int = Field(4, ge=1)


class HyperplaneConfig(SolverBudget):
    """Parameters of the hyperplane line-search method."""
    method: Literal["hyperplane_ls"] = "hyperplane_ls"
    lam: float = Field(0.5, gt=0, lt=1, description="Line-search ratio lambda in (0, 1)")
    theta: float = Field(0.5, gt=0, lt=1, description="Backtracking factor theta in (0, 1)")
    alpha_hat: float = Field(1.0, gt=0, le=1, description="Initial stepsize alpha_hat in (0, 1]")
    beta_hat: float = Field(1.0, gt=0, description="Lower bound of beta_k")
    beta_tilde: float = Field(1.0, gt=0, description="Upper bound of beta_k")
    beta_rule: BetaRule = Field(default_factory=BetaRule)
    schedule: SampleSchedule = Field(default_factory=polynomial, description="Batch-size schedule")

    @model_validator(mode="after")
    def validate_betas(self):
        if self.beta_hat > self.beta_tilde:
            raise ValueError("beta_hat must not exceed beta_tilde")
        return self

    def beta(self, k: int) -> float:
        if self.beta_rule.kind == BetaRuleKind.CONSTANT:
            return self.beta_hat
        exponent = k % self.beta_rule.period
        return min(self.beta_tilde, self.beta_hat * self.beta_rule.ratio**exponent)


@dataclass
class HyperplaneRecord(IterationRecord):
    g_k: Optional[np.ndarray] = None
    beta_k: float = 1.0
    gamma_k: float = 0.0
    # <F_hat(xi^k, z^k), x^k - z^k>, positive whenever the stop test failed
    separation: float = 0.0

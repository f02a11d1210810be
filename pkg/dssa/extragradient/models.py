"""
Extragradient Line-Search Models

Configuration and per-iteration records of the dynamic sampled extragradient
method with an Armijo-type backtracking line search.
"""

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..sampling.models import SampleSchedule, log_rate

LAMBDA_LIMIT = 1.0 / math.sqrt(6.0)


class SolverBudget(BaseModel):
    """Stopping controls shared by all methods."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iterations: int = Field(1000, ge=0, description="Iteration cap")
    oracle_budget: Optional[int] = Field(None, ge=0, description="Cap on cumulative oracle calls")
    residual_tolerance: float = Field(1e-8, gt=0, description="Stop when the empirical residual <= tol * (1 + ||x||)")
    max_backtracks: int = Field(60, ge=0, description="Safety cap on line-search backtracks")
    record_timing: bool = Field(False, description="Record wall-clock nanoseconds in traces")


class ExtragradientConfig(SolverBudget):
    """Parameters of the extragradient line-search method."""
    method: Literal["extragradient_ls"] = "extragradient_ls"
    lam: float = Field(0.3, description="Line-search ratio lambda in (0, 1/sqrt(6))")
    theta: float = Field(0.5, gt=0, le=1, description="Backtracking factor theta in (0, 1]")
    alpha_hat: float = Field(1.0, gt=0, le=1, description="Initial stepsize alpha_hat in (0, 1]")
    schedule: SampleSchedule = Field(default_factory=log_rate, description="Batch-size schedule")
    track_modulus: bool = Field(False, description="Record L_hat_k and assert the stepsize bounds each iteration")

    @field_validator("lam")
    def validate_lam(cls, v):
        if not 0 < v < LAMBDA_LIMIT - 1e-12:
            raise ValueError(f"lam must lie in (0, 1/sqrt(6)) = (0, {LAMBDA_LIMIT:.6f}), got {v}")
        return v


@dataclass
class IterationRecord:
    """One row of a solver trace.

    ``oracle_calls_cum`` follows the convention sum_i (1 + ell_i) N_i.
    ``residual_est`` is the natural residual (alpha = 1) under the empirical
    operator F_hat(xi^k, x^k); ``residual_exact`` uses T when it is known.
    """
    k: int
    x_k: np.ndarray
    z_k: np.ndarray
    alpha_k: float
    ell_k: int
    n_k: int
    oracle_calls_cum: int
    residual_est: float
    residual_exact: Optional[float] = None
    dist_to_solution: Optional[float] = None
    lipschitz_lower: Optional[float] = None
    modulus_mean: Optional[float] = None
    correlated_error: Optional[float] = None
    evaluations: int = 0
    wall_ns: Optional[int] = None

    @property
    def beta_k(self) -> Optional[float]:
        return None

    @property
    def gamma_k(self) -> Optional[float]:
        return None


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    z: np.ndarray
    ell: int
    f_at_z: np.ndarray


@dataclass(frozen=True)
class Converged:
    """The empirical stop test fired at ``x``; ``n_k`` samples were spent on it."""
    x: np.ndarray
    k: int
    n_k: int
    residual: float

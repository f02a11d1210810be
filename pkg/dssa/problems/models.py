"""
Test Problem Specifications

Serializable descriptions of the synthetic SVI families. Each spec is a
pydantic model selected by its ``family`` field in experiment configs.
"""

from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..projections.models import FeasibleSet, SetKind


class NoiseLaw(str, Enum):
    """Law of the i.i.d. unit noise entries, scaled by the family's noise level."""
    GAUSSIAN = "gaussian"
    # +-1 with equal probability; same variance, far cheaper to draw
    RADEMACHER = "rademacher"


class ProblemSpecBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(0, ge=0, lt=2**64, description="Seed for random problem data")


class AffineSviSpec(ProblemSpecBase):
    """T(x) = A x + b with F(xi, x) = (A + E(xi)) x + b + e(xi).

    Omitted ``matrix`` is drawn as a PSD part (>= monotone_margin * I) plus a
    skew part; omitted ``offset`` is drawn so that a random target solves the
    unconstrained problem.
    """
    family: Literal["affine"] = "affine"
    d: int = Field(..., ge=1, description="Dimension")
    matrix: Optional[list[list[float]]] = Field(None, description="A, row-major")
    offset: Optional[list[float]] = Field(None, description="b")
    matrix_noise: float = Field(0.0, ge=0, description="eta_A, std of the entries of E(xi)")
    vector_noise: float = Field(0.0, ge=0, description="eta_b, std of the entries of e(xi)")
    noise_law: NoiseLaw = Field(NoiseLaw.GAUSSIAN, description="Law of the entries of E(xi) and e(xi)")
    monotone_margin: float = Field(0.5, ge=0, description="Smallest eigenvalue of the symmetric part when drawn")
    skew_scale: float = Field(1.0, ge=0, description="Scale of the skew part when drawn")
    feasible_set: Optional[FeasibleSet] = Field(None, description="X; whole space when omitted")

    @model_validator(mode="after")
    def validate_shapes(self):
        if self.matrix is not None and np.asarray(self.matrix, dtype=float).shape != (self.d, self.d):
            raise ValueError(f"matrix must be {self.d}x{self.d}")
        if self.offset is not None and len(self.offset) != self.d:
            raise ValueError(f"offset must have length {self.d}")
        if self.feasible_set is not None and self.feasible_set.dimension != self.d:
            raise ValueError("feasible_set dimension does not match d")
        return self

    @property
    def dimension(self) -> int:
        return self.d


class BlockConstraint(BaseModel):
    """Constraint on one player's strategy block."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["box", "simplex"] = "simplex"
    lower: float = -1.0
    upper: float = 1.0
    scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def validate_bounds(self):
        if self.kind == "box" and self.lower > self.upper:
            raise ValueError("box block needs lower <= upper")
        return self

    def to_set(self, d: int) -> FeasibleSet:
        if self.kind == "box":
            return FeasibleSet(kind=SetKind.BOX, dimension=d, lower=self.lower, upper=self.upper)
        return FeasibleSet(kind=SetKind.SIMPLEX, dimension=d, scale=self.scale)


class SaddlePointSpec(ProblemSpecBase):
    """min_u max_v u'Bv + c'u - d'v, i.e. T(u, v) = (Bv + c, -B'u + d)."""
    family: Literal["saddle"] = "saddle"
    m: int = Field(..., ge=1, description="Dimension of u")
    n: int = Field(..., ge=1, description="Dimension of v")
    coupling: Optional[list[list[float]]] = Field(None, description="B (m x n); Gaussian when omitted")
    c: Optional[list[float]] = Field(None, description="Linear term of u; zero when omitted")
    d_vec: Optional[list[float]] = Field(None, description="Linear term of v; zero when omitted")
    coupling_noise: float = Field(0.0, ge=0, description="Std of the entries of the noise on B")
    linear_noise: float = Field(0.0, ge=0, description="Std of the noise on c and d_vec")
    u_set: BlockConstraint = Field(default_factory=BlockConstraint)
    v_set: BlockConstraint = Field(default_factory=BlockConstraint)

    @model_validator(mode="after")
    def validate_shapes(self):
        if self.coupling is not None and np.asarray(self.coupling, dtype=float).shape != (self.m, self.n):
            raise ValueError(f"coupling must be {self.m}x{self.n}")
        if self.c is not None and len(self.c) != self.m:
            raise ValueError(f"c must have length {self.m}")
        if self.d_vec is not None and len(self.d_vec) != self.n:
            raise ValueError(f"d_vec must have length {self.n}")
        return self

    @property
    def dimension(self) -> int:
        return self.m + self.n


class HolderSpec(ProblemSpecBase):
    """F(xi, x)_i = L(xi) sign(x_i - x*_i) |x_i - x*_i|^delta + additive noise.

    L(xi) = 1 + modulus_spread * U with U ~ Uniform(0, 2), so E L = 1 + spread.
    """
    family: Literal["holder"] = "holder"
    d: int = Field(..., ge=1, description="Dimension")
    exponent: float = Field(0.5, description="Hölder exponent delta in (0, 1)")
    target: Optional[list[float]] = Field(None, description="x*; standard Gaussian when omitted")
    modulus_spread: float = Field(0.0, ge=0, description="Spread of the per-sample modulus L(xi)")
    additive_noise: float = Field(0.0, ge=0, description="Std of zero-mean additive noise")
    noise_law: NoiseLaw = Field(NoiseLaw.GAUSSIAN, description="Law of the additive noise entries")

    @field_validator("exponent")
    def validate_exponent(cls, v):
        if not 0 < v < 1:
            raise ValueError(f"exponent must lie in (0, 1), got {v}; Lipschitz operators belong to the affine family")
        return v

    @model_validator(mode="after")
    def validate_target(self):
        if self.target is not None and len(self.target) != self.d:
            raise ValueError(f"target must have length {self.d}")
        return self

    @property
    def dimension(self) -> int:
        return self.d

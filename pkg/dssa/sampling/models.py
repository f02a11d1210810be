"""
Sampling Models

RNG stream plans and the dynamic sample-size schedules N_k.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

MAX_SEED = 2**64


class StreamTag(str, Enum):
    XI = "xi"
    ETA = "eta"
    VALIDATION = "validation"

    @property
    def code(self) -> int:
        return list(StreamTag).index(self)


@dataclass(frozen=True)
class RngPlan:
    """Derives one counter-based Philox stream per (lane, k, tag).

    ``lane`` namespaces independent consumers of the same master seed
    (replications, diagnostic grid cells, problem construction).
    """
    master_seed: int
    lane: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= self.master_seed < MAX_SEED:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def child(self, *keys: int) -> "RngPlan":
        return RngPlan(self.master_seed, self.lane + tuple(int(key) for key in keys))

    def seed_sequence(self, k: int, tag: StreamTag) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.lane + (tag.code, int(k)))

    def generator(self, k: int, tag: StreamTag) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence(k, tag)))


class ScheduleKind(str, Enum):
    LOG_RATE = "log_rate"
    POLYNOMIAL = "polynomial"
    CONSTANT = "constant"
    CUSTOM = "custom"


class SampleSchedule(BaseModel):
    """Batch-size rule k -> N_k.

    log_rate:  N * ceil((k+mu) * ln(k+mu)^(1+b))
    polynomial:  N * ceil((k+mu)^(1+a) * ln(k+mu)^(1+b)), b = -1 drops the log factor
    constant:    N
    custom:      sizes[k], the last entry repeating past the end
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ScheduleKind = Field(ScheduleKind.LOG_RATE, description="Schedule family")
    n: Optional[int] = Field(None, ge=1, description="Base size N; defaults to the problem dimension")
    a: float = Field(0.0, description="Extra polynomial exponent (polynomial kind)")
    b: float = Field(1.0, description="Log exponent offset")
    mu: float = Field(3.0, description="Shift mu")
    sizes: list[int] = Field(default_factory=list, description="Explicit sizes (custom kind)")
    assume_summable_inverse: bool = Field(False, description="User assertion: sum 1/N_k < inf (custom kind)")
    assume_summable_inverse_sqrt: bool = Field(False, description="User assertion: sum N_k^-1/2 < inf (custom kind)")

    @model_validator(mode="after")
    def validate_parameters(self):
        if self.kind == ScheduleKind.LOG_RATE:
            if not self.b > 0:
                raise ValueError("log_rate schedules need b > 0")
            if not self.mu > 2:
                raise ValueError("log_rate schedules need mu > 2")
        elif self.kind == ScheduleKind.POLYNOMIAL:
            if self.a < 0:
                raise ValueError("polynomial schedules need a >= 0")
            if self.b < -1:
                raise ValueError("polynomial schedules need b >= -1")
            if self.b > -1 and not self.mu > 1:
                raise ValueError("polynomial schedules with a log factor need mu > 1")
            if not self.mu > 0:
                raise ValueError("polynomial schedules need mu > 0")
        elif self.kind == ScheduleKind.CUSTOM:
            if not self.sizes:
                raise ValueError("custom schedules need a nonempty 'sizes' list")
            if any(size < 1 for size in self.sizes):
                raise ValueError("custom schedule sizes must be positive")
        return self

    def with_base(self, n: int) -> "SampleSchedule":
        """Fill in the base size when it was left to default."""
        if self.n is not None:
            return self
        return self.model_copy(update={"n": max(1, int(n))})


def log_rate(n: int | None = None, b: float = 1.0, mu: float = 3.0) -> SampleSchedule:
    return SampleSchedule(kind=ScheduleKind.LOG_RATE, n=n, b=b, mu=mu)


def polynomial(n: int | None = None, a: float = 1.1, b: float = -1.0, mu: float = 1.0) -> SampleSchedule:
    return SampleSchedule(kind=ScheduleKind.POLYNOMIAL, n=n, a=a, b=b, mu=mu)


def constant(n: int) -> SampleSchedule:
    return SampleSchedule(kind=ScheduleKind.CONSTANT, n=n)


def custom(sizes: list[int], summable_inverse: bool = False, summable_inverse_sqrt: bool = False) -> SampleSchedule:
    return SampleSchedule(
        kind=ScheduleKind.CUSTOM,
        sizes=list(sizes),
        assume_summable_inverse=summable_inverse,
        assume_summable_inverse_sqrt=summable_inverse_sqrt,
    )

"""
Sampling Service

Evaluates batch-size schedules and draws oracle batches from derived streams.
"""

import numpy as np

from ..core.models import OracleBatch, StochasticOracle
from .models import RngPlan, SampleSchedule, ScheduleKind, StreamTag


def schedule_sizes(schedule: SampleSchedule, ks) -> np.ndarray:
    """Vectorized N_k for an array of iteration indices (int64)."""
    ks = np.asarray(ks, dtype=np.int64)
    if np.any(ks < 0):
        raise ValueError("iteration indices must be nonnegative")
    base = schedule.n or 1

    if schedule.kind == ScheduleKind.CONSTANT:
        return np.full(ks.shape, base, dtype=np.int64)
    if schedule.kind == ScheduleKind.CUSTOM:
        sizes = np.asarray(schedule.sizes, dtype=np.int64)
        return sizes[np.minimum(ks, sizes.size - 1)]

    shifted = ks.astype(float) + schedule.mu
    log_factor = np.log(shifted) ** (1.0 + schedule.b)
    if schedule.kind == ScheduleKind.LOG_RATE:
        growth = shifted * log_factor
    else:
        growth = shifted ** (1.0 + schedule.a) * log_factor
    # ceiling first, then scale by N
    return base * np.ceil(growth).astype(np.int64)


def schedule_size(schedule: SampleSchedule, k: int) -> int:
    """Batch size N_k at iteration ``k``."""
    return int(schedule_sizes(schedule, np.array([k]))[0])


def summable_inverse(schedule: SampleSchedule) -> bool:
    """Whether sum_k 1/N_k < inf."""
    if schedule.kind == ScheduleKind.LOG_RATE:
        return schedule.b > 0
    if schedule.kind == ScheduleKind.POLYNOMIAL:
        return schedule.a > 0 or schedule.b > 0
    if schedule.kind == ScheduleKind.CUSTOM:
        return schedule.assume_summable_inverse or schedule.assume_summable_inverse_sqrt
    return False


def summable_inverse_sqrt(schedule: SampleSchedule) -> bool:
    """Whether sum_k N_k^(-1/2) < inf."""
    if schedule.kind == ScheduleKind.POLYNOMIAL:
        exponent = 1.0 + schedule.a
        return exponent > 2 or (exponent == 2 and 1.0 + schedule.b > 2)
    if schedule.kind == ScheduleKind.CUSTOM:
        return schedule.assume_summable_inverse_sqrt
    return False


def inverse_sum_bound(schedule: SampleSchedule) -> float:
    """Integral bound on sum_k 1/N_k for log_rate schedules: 1 / (N b ln(mu-1)^b)."""
    if schedule.kind != ScheduleKind.LOG_RATE:
        raise ValueError("the closed-form bound exists only for log_rate schedules")
    base = schedule.n or 1
    return 1.0 / (base * schedule.b * np.log(schedule.mu - 1.0) ** schedule.b)


def draw_batch(oracle: StochasticOracle, plan: RngPlan, k: int, tag: StreamTag, size: int) -> OracleBatch:
    """Draw ``size`` i.i.d. samples from the stream of (plan, k, tag)."""
    if size < 1:
        raise ValueError(f"batch size must be at least 1, got {size}")
    samples = oracle.sample(plan.generator(k, tag), int(size))
    return OracleBatch(samples=samples, size=int(size), k=int(k), tag=tag)

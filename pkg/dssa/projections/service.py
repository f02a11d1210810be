"""
Projection Service

Exact Euclidean projections onto the sets of ``FeasibleSet`` and the natural
residual r_alpha(H; x) = ||x - P(x - alpha H(x))|| used as the convergence
metric by every solver.
"""

import numpy as np

from ..exceptions import DimensionMismatchError
from .models import FeasibleSet, SetKind

FEASIBILITY_TOLERANCE = 1e-12


def as_point(x, d: int, what: str = "point") -> np.ndarray:
    """Return ``x`` as a float vector of length ``d``; rejects NaN/Inf."""
    array = np.asarray(x, dtype=float)
    if array.shape != (d,):
        raise DimensionMismatchError(d, array.shape, what)
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{what} has non-finite entries")
    return array


def project(feasible_set: FeasibleSet, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``feasible_set``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (feasible_set.dimension,):
        raise DimensionMismatchError(feasible_set.dimension, x.shape, "projection argument")

    kind = feasible_set.kind
    if kind == SetKind.WHOLE_SPACE:
        return x.copy()
    if kind == SetKind.BOX:
        return np.clip(x, feasible_set.lower_bounds(), feasible_set.upper_bounds())
    if kind == SetKind.BALL:
        return _project_ball(x, feasible_set.center_point(), feasible_set.radius)
    if kind == SetKind.SIMPLEX:
        return _project_simplex(x, feasible_set.scale)
    if kind == SetKind.NONNEGATIVE_ORTHANT:
        return np.maximum(x, 0.0)
    if kind == SetKind.HALFSPACE:
        return _project_halfspace(x, feasible_set.normal_vector(), feasible_set.offset)
    if kind == SetKind.PRODUCT:
        parts = []
        start = 0
        for block in feasible_set.blocks:
            stop = start + block.dimension
            parts.append(project(block, x[start:stop]))
            start = stop
        return np.concatenate(parts)
    if kind == SetKind.CALLBACK:
        projected = np.asarray(feasible_set.projector(x.copy()), dtype=float)
        if projected.shape != x.shape:
            raise DimensionMismatchError(x.size, projected.shape, "callback projection")
        return projected
    raise ValueError(f"Unsupported set kind: {kind}")


def _project_ball(x: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    offset = x - center
    norm = np.linalg.norm(offset)
    if norm <= radius:
        return x.copy()
    return center + offset * (radius / norm)


def _project_simplex(x: np.ndarray, scale: float) -> np.ndarray:
    # sort-and-threshold; stable sort keeps ties in index order
    u = np.sort(x, kind="stable")[::-1]
    cssv = np.cumsum(u) - scale
    ind = np.arange(1, x.size + 1)
    cond = u - cssv / ind > 0
    rho = ind[cond][-1]
    theta = cssv[cond][-1] / float(rho)
    return np.maximum(x - theta, 0.0)


def _project_halfspace(x: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    violation = float(normal @ x) - offset
    if violation <= 0.0:
        return x.copy()
    return x - (violation / float(normal @ normal)) * normal


def feasibility_residual(feasible_set: FeasibleSet, x) -> float:
    """Distance from ``x`` to its projection."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - project(feasible_set, x)))


def is_feasible(feasible_set: FeasibleSet, x, tol: float = FEASIBILITY_TOLERANCE) -> bool:
    return feasibility_residual(feasible_set, x) <= tol * (1.0 + float(np.linalg.norm(x)))


def natural_residual(feasible_set: FeasibleSet, h_at_x, x, alpha: float = 1.0) -> float:
    """Natural residual ||x - P(x - alpha * H(x))||; zero exactly at solutions of VI(H, X)."""
    if not alpha > 0:
        raise ValueError(f"natural residual needs alpha > 0, got {alpha}")
    x = np.asarray(x, dtype=float)
    h_at_x = np.asarray(h_at_x, dtype=float)
    if h_at_x.shape != x.shape:
        raise DimensionMismatchError(x.size, h_at_x.shape, "operator value")
    return float(np.linalg.norm(x - project(feasible_set, x - alpha * h_at_x)))


def sample_points(feasible_set: FeasibleSet, n: int, rng: np.random.Generator, spread: float = 3.0) -> np.ndarray:
    """Draw ``n`` Gaussian points around the set's natural center, shape (n, d)."""
    d = feasible_set.dimension
    anchor = np.zeros(d)
    if feasible_set.kind == SetKind.BALL:
        anchor = feasible_set.center_point()
    elif feasible_set.kind == SetKind.BOX:
        with np.errstate(invalid="ignore"):
            middle = 0.5 * (feasible_set.lower_bounds() + feasible_set.upper_bounds())
        anchor = np.where(np.isfinite(middle), middle, 0.0)
    return anchor + spread * rng.standard_normal((n, d))


def sample_feasible(feasible_set: FeasibleSet, n: int, rng: np.random.Generator, spread: float = 3.0) -> np.ndarray:
    """Draw ``n`` feasible points by projecting random points, shape (n, d)."""
    points = sample_points(feasible_set, n, rng, spread)
    return np.stack([project(feasible_set, p) for p in points])

"""
Feasible Set Models

Pydantic description of the closed convex sets the solvers project onto.
Sets are declared in experiment configs, so every field is plain data; the
``callback`` kind is the single exception and is only available from Python.
"""

from collections.abc import Callable
from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SetKind(str, Enum):
    WHOLE_SPACE = "whole_space"
    BOX = "box"
    BALL = "ball"
    SIMPLEX = "simplex"
    NONNEGATIVE_ORTHANT = "nonnegative_orthant"
    HALFSPACE = "halfspace"
    PRODUCT = "product"
    CALLBACK = "callback"


# kinds covered by the exactness property suite
EXACT_KINDS = (SetKind.BOX, SetKind.BALL, SetKind.SIMPLEX, SetKind.NONNEGATIVE_ORTHANT, SetKind.HALFSPACE)

Scalars = Union[float, list[float]]


class FeasibleSet(BaseModel):
    """A closed convex subset of R^d with an exact Euclidean projection."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SetKind = Field(SetKind.WHOLE_SPACE, description="Shape of the set")
    dimension: int = Field(..., ge=1, description="Ambient dimension d")
    lower: Optional[Scalars] = Field(None, description="Box lower bounds (scalar broadcasts)")
    upper: Optional[Scalars] = Field(None, description="Box upper bounds (scalar broadcasts)")
    center: Optional[Scalars] = Field(None, description="Ball center (scalar broadcasts)")
    radius: Optional[float] = Field(None, description="Ball radius")
    scale: float = Field(1.0, description="Simplex total mass")
    normal: Optional[list[float]] = Field(None, description="Halfspace normal a in <a, y> <= offset")
    offset: float = Field(0.0, description="Halfspace offset")
    blocks: list["FeasibleSet"] = Field(default_factory=list, description="Factors of a product set")
    projector: Optional[Callable] = Field(None, exclude=True, description="User projection for the callback kind")
    compact: Optional[bool] = Field(None, description="Compactness flag; derived from the kind when omitted")

    @model_validator(mode="after")
    def validate_kind_parameters(self):
        d = self.dimension
        if self.kind == SetKind.BOX:
            if self.lower is None or self.upper is None:
                raise ValueError("box sets need both 'lower' and 'upper'")
            lower, upper = _broadcast(self.lower, d, "lower"), _broadcast(self.upper, d, "upper")
            if np.any(lower > upper):
                raise ValueError("box sets need lower <= upper componentwise")
        elif self.kind == SetKind.BALL:
            if self.radius is None or not self.radius > 0:
                raise ValueError("ball sets need radius > 0")
            _broadcast(0.0 if self.center is None else self.center, d, "center")
        elif self.kind == SetKind.SIMPLEX:
            if not self.scale > 0:
                raise ValueError("simplex sets need scale > 0")
        elif self.kind == SetKind.HALFSPACE:
            if self.normal is None:
                raise ValueError("halfspace sets need a 'normal'")
            normal = _broadcast(self.normal, d, "normal")
            if not np.any(normal != 0.0):
                raise ValueError("halfspace normal must be nonzero")
        elif self.kind == SetKind.PRODUCT:
            if not self.blocks:
                raise ValueError("product sets need at least one block")
            total = sum(block.dimension for block in self.blocks)
            if total != d:
                raise ValueError(f"product block dimensions sum to {total}, expected {d}")
        elif self.kind == SetKind.CALLBACK:
            if self.projector is None:
                raise ValueError("callback sets need a 'projector'")
        return self

    @property
    def is_compact(self) -> bool:
        if self.compact is not None:
            return self.compact
        if self.kind in (SetKind.BOX, SetKind.BALL, SetKind.SIMPLEX):
            return True
        if self.kind == SetKind.PRODUCT:
            return all(block.is_compact for block in self.blocks)
        return False

    def lower_bounds(self) -> np.ndarray:
        return _broadcast(self.lower, self.dimension, "lower")

    def upper_bounds(self) -> np.ndarray:
        return _broadcast(self.upper, self.dimension, "upper")

    def center_point(self) -> np.ndarray:
        return _broadcast(0.0 if self.center is None else self.center, self.dimension, "center")

    def normal_vector(self) -> np.ndarray:
        return _broadcast(self.normal, self.dimension, "normal")


def _broadcast(value, d: int, name: str) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if array.ndim == 0:
        return np.full(d, float(array))
    if array.shape != (d,):
        raise ValueError(f"'{name}' has length {array.size}, expected {d}")
    return array


def whole_space(d: int) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.WHOLE_SPACE, dimension=d)


def box(lower: Scalars, upper: Scalars, d: int) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.BOX, dimension=d, lower=lower, upper=upper)


def ball(radius: float, d: int, center: Scalars = 0.0) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.BALL, dimension=d, radius=radius, center=center)


def simplex(d: int, scale: float = 1.0) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.SIMPLEX, dimension=d, scale=scale)


def nonnegative_orthant(d: int) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.NONNEGATIVE_ORTHANT, dimension=d)


def halfspace(normal: list[float], offset: float) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.HALFSPACE, dimension=len(normal), normal=list(normal), offset=offset)


def product(*blocks: FeasibleSet) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.PRODUCT, dimension=sum(b.dimension for b in blocks), blocks=list(blocks))


def from_callback(projector: Callable[[np.ndarray], np.ndarray], d: int, compact: bool = False) -> FeasibleSet:
    return FeasibleSet(kind=SetKind.CALLBACK, dimension=d, projector=projector, compact=compact)

"""Flat gradient vectors and the angle between accumulated gradients."""
from __future__ import annotations

import math
import sys
from typing import Iterable

import numpy as np

from . import kernels

NORM_FLOOR = 1e-12
# cosines this close to +-1 are within rounding of the inputs; arccos cannot
# resolve the difference (below ~3e-6 degrees), so they map to exactly 0 / 180
COS_SNAP = 8 * sys.float_info.epsilon


class DegenerateGradient(ValueError):
    """Raised when a vector is too short to define a direction."""


class GradVector:
    """Immutable double-precision gradient vector with finite entries."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float] | np.ndarray):
        arr = np.array(values, dtype=np.float64).ravel()
        if arr.size < 1:
            raise ValueError("GradVector needs at least one component")
        if not np.isfinite(arr).all():
            raise ValueError("GradVector components must be finite")
        arr.flags.writeable = False
        self._values = arr

    @classmethod
    def zeros(cls, dim: int) -> "GradVector":
        return cls(np.zeros(dim))

    @property
    def values(self) -> np.ndarray:
        """Read-only view of the components."""
        return self._values

    @property
    def dim(self) -> int:
        return self._values.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __neg__(self) -> "GradVector":
        return GradVector(-self._values)

    def scale(self, s: float) -> "GradVector":
        return GradVector(self._values * s)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradVector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self._values, other._values))

    __hash__ = None

    def __repr__(self) -> str:
        return f"GradVector(dim={self.dim})"


def _check_dims(a: GradVector, b: GradVector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def dot(a: GradVector, b: GradVector) -> float:
    _check_dims(a, b)
    return kernels.exact_dot(a.values, b.values)


def norm(a: GradVector) -> float:
    return math.sqrt(kernels.exact_dot(a.values, a.values))


def accumulate(acc: GradVector, g: GradVector) -> GradVector:
    """Componentwise sum ``acc + g``."""
    _check_dims(acc, g)
    with np.errstate(over="ignore"):
        total = acc.values + g.values
    return GradVector(total)


def angle_deg(a: GradVector, b: GradVector) -> float:
    """Angle between two vectors in degrees, in ``[0, 180]``.

    Raises DegenerateGradient when either norm is at or below NORM_FLOOR.
    """
    _check_dims(a, b)
    ab, aa, bb = kernels.angle_terms(a.values, b.values)
    na, nb = math.sqrt(aa), math.sqrt(bb)
    if na <= NORM_FLOOR or nb <= NORM_FLOOR:
        raise DegenerateGradient(f"norm below floor ({na:.3g}, {nb:.3g})")
    # sqrt(aa*bb) rather than na*nb: exact for parallel inputs
    denom = math.sqrt(aa * bb)
    if not (math.isfinite(denom) and denom > 0.0):
        denom = na * nb
    cos = ab / denom
    if cos >= 1.0 - COS_SNAP:
        return 0.0
    if cos <= -1.0 + COS_SNAP:
        return 180.0
    return math.degrees(math.acos(cos))

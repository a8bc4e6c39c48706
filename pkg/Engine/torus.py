"""
Torus Geometry Module

Periodic unit-square geometry for particle positions:
- Wrapping raw coordinates into [0, 1)
- Minimum-image displacements with representatives in (-0.5, 0.5]
- Euclidean distances on the torus

The scalar helpers (wrap, displacement, distance) work on TorusPoint values;
the array helpers (wrap_positions, minimum_image) are what the simulator uses
on whole particle sets.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


HALF_PERIOD = 0.5


@dataclass(frozen=True)
class TorusPoint:
    """A position on the unit torus. Both coordinates lie in [0, 1)."""
    x: float
    y: float

    def __post_init__(self):
        for name, value in (("x", self.x), ("y", self.y)):
            if not (0.0 <= value < 1.0):
                raise ValueError(f"TorusPoint.{name} must lie in [0, 1), got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


@dataclass(frozen=True)
class TorusVector:
    """A minimum-image displacement; each component lies in (-0.5, 0.5]."""
    dx: float
    dy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy], dtype=np.float64)

    def norm(self) -> float:
        return math.hypot(self.dx, self.dy)


# --- Array helpers ---

def wrap_positions(positions) -> np.ndarray:
    """
    Reduce coordinates modulo 1 into [0, 1).

    Args:
        positions: Array-like of coordinates, any shape

    Returns:
        Float64 array of the same shape with every entry in [0, 1)

    Raises:
        ValueError if any coordinate is not finite
    """
    arr = np.asarray(positions, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Cannot wrap non-finite coordinates")

    wrapped = np.mod(arr, 1.0)
    # np.mod rounds tiny negative inputs up to exactly 1.0
    return np.where(wrapped >= 1.0, 0.0, wrapped)


def minimum_image(delta) -> np.ndarray:
    """
    Shift displacement components by integers into (-0.5, 0.5].

    A component of exactly -0.5 maps to +0.5.
    """
    delta = np.asarray(delta, dtype=np.float64)
    return delta - np.ceil(delta - HALF_PERIOD)


# --- Scalar operations ---

def wrap(p: Sequence[float]) -> TorusPoint:
    """Wrap a raw 2-vector onto the torus."""
    if len(p) != 2:
        raise ValueError(f"Expected a 2-vector, got {len(p)} components")
    x, y = wrap_positions(p)
    return TorusPoint(float(x), float(y))


def displacement(a: TorusPoint, b: TorusPoint) -> TorusVector:
    """Minimum-image displacement a - b."""
    dx, dy = minimum_image([a.x - b.x, a.y - b.y])
    return TorusVector(float(dx), float(dy))


def distance(a: TorusPoint, b: TorusPoint) -> float:
    """Euclidean length of the minimum-image displacement; at most sqrt(2)/2."""
    return displacement(a, b).norm()

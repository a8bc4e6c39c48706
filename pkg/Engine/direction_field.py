"""
Direction Field Module

Builds and evaluates orientation fields via the orthonormal pair (s, l):
- s: direction of smallest stress (particles line up along s)
- l: direction of largest stress, s rotated by +90 degrees

Supported field variants:
- HomogeneousField: constant angle
- SingularityField: cores and deltas composed by their indices (+1/2, -1/2)
- PiecewiseField: axis-aligned rectangles tiling the unit square
- AngleMapField: a theta grid loaded from an angle-map file

Orientations are pi-periodic: s and -s describe the same field line.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Union

import numpy as np

from torus import TorusPoint, wrap_positions


logger = logging.getLogger(__name__)

ORTHONORMAL_TOLERANCE = 1e-12
DEGENERATE_TOLERANCE = 1e-12


# --- Errors ---

class SingularityError(ValueError):
    """Raised when a field is evaluated exactly at one of its singular points."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class DegenerateOrientationError(ValueError):
    """Raised when neighbouring grid orientations cancel out under interpolation."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class AngleMapError(ValueError):
    """Raised for malformed angle-map files. `line` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownPresetError(LookupError):
    """Raised when a named preset does not exist."""

    def __init__(self, kind: str, name: str, valid: list[str]):
        super().__init__(f"Unknown {kind} preset '{name}'. Valid presets: {', '.join(valid)}")
        self.name = name
        self.valid = valid


# --- Domain types ---

class SingularityKind(str, Enum):
    """Fingerprint singularity types."""
    CORE = "core"
    DELTA = "delta"

    @property
    def index(self) -> float:
        return 0.5 if self is SingularityKind.CORE else -0.5


@dataclass(frozen=True, eq=False)
class Frame:
    """Orthonormal pair at a point: s (smallest stress) and l (largest stress)."""
    s: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        l = np.asarray(self.l, dtype=np.float64)
        if s.shape != (2,) or l.shape != (2,):
            raise ValueError("Frame vectors must have shape (2,)")
        if (abs(np.hypot(*s) - 1.0) > ORTHONORMAL_TOLERANCE
                or abs(np.hypot(*l) - 1.0) > ORTHONORMAL_TOLERANCE
                or abs(float(s @ l)) > ORTHONORMAL_TOLERANCE):
            raise ValueError("Frame vectors must be orthonormal")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "l", l)

    @classmethod
    def from_angle(cls, theta: float) -> "Frame":
        c, s = math.cos(theta), math.sin(theta)
        return cls(s=np.array([c, s]), l=np.array([-s, c]))


@dataclass(frozen=True)
class Singularity:
    position: TorusPoint
    kind: SingularityKind


@dataclass(frozen=True, eq=False)
class AngleGrid:
    """
    Orientation angles on a regular grid.

    theta[j, i] belongs to the cell centred at ((i + 0.5) / width, (j + 0.5) / height);
    row j = 0 is the row nearest y = 0.
    """
    width: int
    height: int
    theta: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("AngleGrid dimensions must be positive")
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.shape != (self.height, self.width):
            raise ValueError(
                f"AngleGrid theta has shape {theta.shape}, expected {(self.height, self.width)}"
            )
        if not np.all((theta >= 0.0) & (theta < math.pi)):
            raise ValueError("AngleGrid theta values must lie in [0, pi)")
        theta = theta.copy()
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @cached_property
    def doubled(self) -> tuple[np.ndarray, np.ndarray]:
        """Cosine and sine of the doubled angles, the interpolation embedding."""
        return np.cos(2.0 * self.theta), np.sin(2.0 * self.theta)


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle [x0, x1) x [y0, y1) with a constant angle."""
    x0: float
    y0: float
    x1: float
    y1: float
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise ValueError(f"Region bounds must satisfy 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1: {self}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def overlap(self, other: "Region") -> float:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return max(w, 0.0) * max(h, 0.0)


# --- Field variants ---

@dataclass(frozen=True)
class HomogeneousField:
    theta0: float


@dataclass(frozen=True)
class SingularityField:
    singularities: tuple[Singularity, ...]
    theta0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "singularities", tuple(self.singularities))


@dataclass(frozen=True)
class PiecewiseField:
    regions: tuple[Region, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise ValueError("PiecewiseField needs at least one region")
        total = sum(r.area for r in regions)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Piecewise regions must tile the unit square, total area is {total}")
        for i, a in enumerate(regions):
            for b in regions[i + 1:]:
                if a.overlap(b) > 1e-12:
                    raise ValueError(f"Piecewise regions overlap: {a} and {b}")
        object.__setattr__(self, "regions", regions)


@dataclass(frozen=True, eq=False)
class AngleMapField:
    grid: AngleGrid


DirectionFieldSpec = Union[HomogeneousField, SingularityField, PiecewiseField, AngleMapField]


# --- Evaluation ---

def reduce_mod_pi(theta):
    """Reduce angles into [0, pi)."""
    reduced = np.mod(theta, math.pi)
    return np.where(reduced >= math.pi, 0.0, reduced)


def _singularity_thetas(singularities, theta0: float, points: np.ndarray) -> np.ndarray:
    theta = np.full(len(points), float(theta0))
    for sing in singularities:
        dx = points[:, 0] - sing.position.x
        dy = points[:, 1] - sing.position.y
        hit = (dx == 0.0) & (dy == 0.0)
        if hit.any():
            index = int(np.argmax(hit))
            raise SingularityError(
                f"Orientation undefined at {sing.kind.value} ({sing.position.x}, {sing.position.y})",
                index=index,
            )
        # planar arg: the composed field need not be periodic
        theta = theta + sing.kind.index * np.arctan2(dy, dx)
    return reduce_mod_pi(theta)


def _piecewise_thetas(regions, points: np.ndarray) -> np.ndarray:
    theta = np.full(len(points), np.nan)
    for region in regions:
        inside = ((points[:, 0] >= region.x0) & (points[:, 0] < region.x1)
                  & (points[:, 1] >= region.y0) & (points[:, 1] < region.y1))
        theta[inside] = region.theta
    missing = np.isnan(theta)
    if missing.any():
        raise ValueError(f"Point {points[int(np.argmax(missing))]} is not covered by any region")
    return reduce_mod_pi(theta)


def _angle_map_thetas(grid: AngleGrid, points: np.ndarray) -> np.ndarray:
    # fractional index relative to cell centres, wrapping periodically
    u = points[:, 0] * grid.width - 0.5
    v = points[:, 1] * grid.height - 0.5
    i0 = np.floor(u)
    j0 = np.floor(v)
    fx = u - i0
    fy = v - j0
    i0 = i0.astype(np.int64) % grid.width
    j0 = j0.astype(np.int64) % grid.height
    i1 = (i0 + 1) % grid.width
    j1 = (j0 + 1) % grid.height

    cos2, sin2 = grid.doubled
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    vx = w00 * cos2[j0, i0] + w10 * cos2[j0, i1] + w01 * cos2[j1, i0] + w11 * cos2[j1, i1]
    vy = w00 * sin2[j0, i0] + w10 * sin2[j0, i1] + w01 * sin2[j1, i0] + w11 * sin2[j1, i1]

    degenerate = np.hypot(vx, vy) < DEGENERATE_TOLERANCE
    if degenerate.any():
        index = int(np.argmax(degenerate))
        raise DegenerateOrientationError(
            f"Opposing orientations cancel at {points[index]}", index=index
        )
    return reduce_mod_pi(np.arctan2(vy, vx) / 2.0)


def orientations(spec: DirectionFieldSpec, points) -> np.ndarray:
    """
    Orientation angle theta in [0, pi) at each point.

    Args:
        spec: Field specification
        points: (N, 2) array of positions

    Returns:
        (N,) array of angles

    Raises:
        SingularityError if a point sits exactly on a singularity
        DegenerateOrientationError if angle-map interpolation cancels out
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))

    if isinstance(spec, HomogeneousField):
        return np.full(len(points), float(reduce_mod_pi(spec.theta0)))
    if isinstance(spec, SingularityField):
        return _singularity_thetas(spec.singularities, spec.theta0, points)
    if isinstance(spec, PiecewiseField):
        return _piecewise_thetas(spec.regions, points)
    if isinstance(spec, AngleMapField):
        return _angle_map_thetas(spec.grid, points)
    raise TypeError(f"Unsupported direction field: {type(spec).__name__}")


def frames(spec: DirectionFieldSpec, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised evaluate: (s, l) arrays of shape (N, 2)."""
    theta = orientations(spec, points)
    c = np.cos(theta)
    sn = np.sin(theta)
    s = np.stack([c, sn], axis=1)
    l = np.stack([-sn, c], axis=1)
    return s, l


def evaluate(spec: DirectionFieldSpec, x: TorusPoint) -> Frame:
    """Orthonormal frame (s, l) of the field at a single point."""
    theta = float(orientations(spec, [[x.x, x.y]])[0])
    return Frame.from_angle(theta)


def singularity_orientation(singularities: list[Singularity], theta0: float, x: TorusPoint) -> float:
    """theta0 + sum of index * arg(x - position), reduced into [0, pi)."""
    return float(_singularity_thetas(singularities, theta0, np.array([[x.x, x.y]]))[0])


def angle_map_theta(grid: AngleGrid, x: TorusPoint) -> float:
    """Bilinear interpolation of the doubled-angle embedding (cos 2θ, sin 2θ)."""
    return float(_angle_map_thetas(grid, np.array([[x.x, x.y]]))[0])


# --- Angle-map files ---

def load_angle_map(text: Union[bytes, str]) -> AngleGrid:
    """
    Parse an angle-map file.

    Format: first line `width height`, then `height` rows of `width` angles
    in radians, bottom row first. Values must lie in [0, pi]; pi folds to 0.

    Raises:
        AngleMapError naming the offending line
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise AngleMapError(f"not valid UTF-8 ({e.reason})", line=1)

    lines = text.splitlines()
    if not lines:
        raise AngleMapError("missing header", line=1)

    header = lines[0].split()
    if len(header) != 2:
        raise AngleMapError("header must be 'width height'", line=1)
    try:
        width, height = int(header[0]), int(header[1])
    except ValueError:
        raise AngleMapError("header values must be integers", line=1)
    if width < 1 or height < 1:
        raise AngleMapError("width and height must be positive", line=1)

    rows: list[list[float]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if len(rows) == height:
            raise AngleMapError(f"expected {height} rows, found more", line=line_no)
        tokens = line.split()
        if len(tokens) != width:
            raise AngleMapError(f"expected {width} values, found {len(tokens)}", line=line_no)
        row = []
        for token in tokens:
            try:
                value = float(token)
            except ValueError:
                raise AngleMapError(f"'{token}' is not a number", line=line_no)
            if not (0.0 <= value <= math.pi):
                raise AngleMapError(f"angle {value} outside [0, pi]", line=line_no)
            row.append(0.0 if value == math.pi else value)
        rows.append(row)

    if len(rows) != height:
        raise AngleMapError(f"expected {height} rows, found {len(rows)}", line=len(lines) + 1)

    return AngleGrid(width=width, height=height, theta=np.array(rows, dtype=np.float64))


def load_angle_map_file(path: str) -> AngleGrid:
    with open(path, "rb") as f:
        return load_angle_map(f.read())


def dump_angle_map(grid: AngleGrid) -> str:
    """Serialize a grid in the angle-map format with round-trip precision."""
    lines = [f"{grid.width} {grid.height}"]
    for row in grid.theta:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def sample_theta(spec: DirectionFieldSpec, width: int, height: int) -> AngleGrid:
    """Sample a field at the cell centres of a width x height grid."""
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    gx, gy = np.meshgrid(xs, ys)
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    theta = orientations(spec, points).reshape(height, width)
    return AngleGrid(width=width, height=height, theta=theta)


# --- Streamlines and indices ---

def _oriented_direction(spec: DirectionFieldSpec, p: np.ndarray, previous: Optional[np.ndarray],
                        reverse: bool = False) -> np.ndarray:
    s, _ = frames(spec, wrap_positions(p)[None, :])
    s = s[0]
    if previous is None:
        # first step: prefer +x, then +y (or the opposite when reversed)
        if s[0] < 0.0 or (s[0] == 0.0 and s[1] < 0.0):
            s = -s
        if reverse:
            s = -s
    elif float(s @ previous) < 0.0:
        s = -s
    return s


def trace_streamline(spec: DirectionFieldSpec, seed: TorusPoint, step: float, n_steps: int,
                     reverse: bool = False) -> np.ndarray:
    """
    Follow the lines of smallest stress from a seed with fixed midpoint steps.

    The sign of s is chosen at every evaluation to agree with the previous
    direction. The first step heads towards +x (then +y), or the opposite way
    with reverse. Tracing stops early at a singular or degenerate point.

    Returns:
        (M, 2) polyline in unwrapped planar coordinates, M <= n_steps + 1
    """
    if step <= 0:
        raise ValueError("step must be positive")

    p = seed.as_array()
    points = [p]
    direction = None
    for _ in range(n_steps):
        try:
            first = _oriented_direction(spec, p, direction, reverse)
            mid = p + 0.5 * step * first
            direction = _oriented_direction(spec, mid, first)
        except (SingularityError, DegenerateOrientationError) as e:
            logger.debug("Streamline from (%s, %s) truncated: %s", seed.x, seed.y, e)
            break
        p = p + step * direction
        points.append(p)
    return np.array(points)


def poincare_index(spec: DirectionFieldSpec, center: TorusPoint, radius: float, samples: int = 64) -> float:
    """
    Winding of the orientation around a circle, in turns.

    +1/2 around a core, -1/2 around a delta, 0 where the field is regular.
    """
    phi = 2.0 * math.pi * np.arange(samples) / samples
    ring = np.stack([center.x + radius * np.cos(phi), center.y + radius * np.sin(phi)], axis=1)
    theta = orientations(spec, wrap_positions(ring))
    steps = np.diff(theta, append=theta[0])
    steps = steps - math.pi * np.ceil(steps / math.pi - 0.5)
    return float(steps.sum() / (2.0 * math.pi))


# --- Presets ---

def _sing(kind: SingularityKind, x: float, y: float) -> Singularity:
    return Singularity(position=TorusPoint(x, y), kind=kind)


# Composite placements approximate the published example fields.
FIELD_PRESETS = {
    "vertical": lambda: HomogeneousField(theta0=math.pi / 2),
    "horizontal": lambda: HomogeneousField(theta0=0.0),
    "delta": lambda: SingularityField((_sing(SingularityKind.DELTA, 0.5, 0.5),)),
    "core": lambda: SingularityField((_sing(SingularityKind.CORE, 0.5, 0.5),)),
    "loop": lambda: SingularityField((
        _sing(SingularityKind.CORE, 0.5, 0.6),
        _sing(SingularityKind.DELTA, 0.5, 0.25),
    )),
    "whorl": lambda: SingularityField((
        _sing(SingularityKind.CORE, 0.45, 0.55),
        _sing(SingularityKind.CORE, 0.55, 0.45),
        _sing(SingularityKind.DELTA, 0.15, 0.2),
        _sing(SingularityKind.DELTA, 0.85, 0.2),
    )),
    "double_delta": lambda: SingularityField((
        _sing(SingularityKind.DELTA, 0.3, 0.5),
        _sing(SingularityKind.DELTA, 0.7, 0.5),
    )),
    "arch_split": lambda: PiecewiseField((
        Region(0.0, 0.0, 1.0, 0.5, 0.0),
        Region(0.0, 0.5, 1.0, 1.0, math.pi / 4),
    )),
}


def field_preset(name: str) -> DirectionFieldSpec:
    """Named direction field."""
    factory = FIELD_PRESETS.get(name)
    if factory is None:
        raise UnknownPresetError("field", name, sorted(FIELD_PRESETS))
    return factory()

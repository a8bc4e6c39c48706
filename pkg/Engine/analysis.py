"""
Pattern Analysis Module

Quantitative diagnostics for particle states:
- static_residual: largest net force, zero for steady states
- count_lines / ridge_spacing: parallel ridges under homogeneous fields
- radial_profile: ring formation around a centre
- count_clusters: single-linkage ridge proxy for curved fields
- certify_steady_state: residual and drift of the equidistant line construction
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from direction_field import DirectionFieldSpec, HomogeneousField
from forces import ForceModel, with_overrides
from simulator import (
    CircleInit, Integrator, LinesInit, NeighborStrategy, ParticleState, SimConfig,
    init_state, integrate, net_forces_direct,
)
from torus import TorusPoint, minimum_image, wrap_positions


logger = logging.getLogger(__name__)

DEFAULT_GAP = 0.02
DEFAULT_LINK = 0.015
RESIDUAL_TOLERANCE = 1e-12
DRIFT_TOLERANCE = 1e-10


class InsufficientLinesError(ValueError):
    """Raised when spacing statistics need at least two lines."""
    pass


@dataclass(frozen=True)
class LinePattern:
    n_lines: int
    centers: tuple[float, ...]
    spacings: tuple[float, ...]

    def __post_init__(self):
        if len(self.centers) != self.n_lines:
            raise ValueError("LinePattern needs one center per line")
        if any(b <= a for a, b in zip(self.centers, self.centers[1:])):
            raise ValueError("LinePattern centers must be strictly increasing")
        if self.n_lines >= 2 and abs(sum(self.spacings) - 1.0) > 1e-9:
            raise ValueError("LinePattern spacings must sum to 1")


@dataclass(frozen=True)
class RadialProfile:
    center: TorusPoint
    mean_radius: float
    std_radius: float
    max_pairwise_distance: float

    @property
    def coefficient_of_variation(self) -> float:
        return self.std_radius / self.mean_radius if self.mean_radius > 0 else math.inf


@dataclass(frozen=True)
class SteadyStateCertificate:
    n_lines: int
    n_particles: int
    force_name: str
    residual: float
    euler_drift: float
    rkdp_drift: float
    steps: int

    @property
    def passed(self) -> bool:
        return (self.residual <= RESIDUAL_TOLERANCE
                and self.euler_drift <= DRIFT_TOLERANCE
                and self.rkdp_drift <= DRIFT_TOLERANCE)


# --- Forces ---

def static_residual(state: ParticleState, force: ForceModel, field: DirectionFieldSpec) -> float:
    """Largest Euclidean net-force magnitude over all particles."""
    v = net_forces_direct(state, force, field)
    return float(np.hypot(v[:, 0], v[:, 1]).max())


# --- Lines ---

def _projected(state: ParticleState, direction_angle: float) -> np.ndarray:
    # coordinate across the ridges; equals x for vertical ridges
    normal = np.array([math.sin(direction_angle), -math.cos(direction_angle)])
    return wrap_positions(state.positions @ normal)


def count_lines(state: ParticleState, direction_angle: float, gap_threshold: float = DEFAULT_GAP) -> LinePattern:
    """
    Cluster particles into ridges running along direction_angle.

    Projected coordinates are sorted around the circle and split wherever
    the circular gap exceeds gap_threshold.
    """
    if not (0.0 < gap_threshold < 0.5):
        raise ValueError(f"gap_threshold must lie in (0, 0.5), got {gap_threshold!r}")

    p = np.sort(_projected(state, direction_angle))
    n = len(p)
    gaps = np.diff(p, append=p[0] + 1.0)
    splits = gaps > gap_threshold

    if splits.sum() < 2:
        # one ridge, possibly straddling the seam
        start = (int(np.argmax(splits)) + 1) % n if splits.any() else 0
        unwrapped = np.roll(p, -start)
        if start:
            unwrapped[n - start:] += 1.0
        center = float(wrap_positions(unwrapped.mean()))
        return LinePattern(n_lines=1, centers=(center,), spacings=())

    start = (int(np.argmax(splits)) + 1) % n
    unwrapped = np.roll(p, -start)
    if start:
        unwrapped[n - start:] += 1.0
    boundaries = np.flatnonzero(np.roll(splits, -start))[:-1] + 1
    clusters = np.split(unwrapped, boundaries)

    centers = np.sort(wrap_positions([c.mean() for c in clusters]))
    spacings = np.diff(centers, append=centers[0] + 1.0)
    return LinePattern(
        n_lines=len(centers),
        centers=tuple(float(c) for c in centers),
        spacings=tuple(float(s) for s in spacings),
    )


def ridge_spacing(pattern: LinePattern) -> tuple[float, float]:
    """Mean and standard deviation of the circular line spacings."""
    if pattern.n_lines < 2:
        raise InsufficientLinesError(f"Ridge spacing needs at least two lines, found {pattern.n_lines}")
    spacings = np.array(pattern.spacings)
    return float(spacings.mean()), float(spacings.std())


# --- Rings and clusters ---

def max_pairwise_distance(state: ParticleState, block: int = 512) -> float:
    positions = state.positions
    best = 0.0
    for start in range(0, state.n, block):
        d = minimum_image(positions[start:start + block, None, :] - positions[None, :, :])
        best = max(best, float(np.hypot(d[..., 0], d[..., 1]).max()))
    return best


def radial_profile(state: ParticleState, center: TorusPoint) -> RadialProfile:
    """Distance statistics from a centre plus the largest pairwise distance."""
    d = minimum_image(state.positions - center.as_array())
    radii = np.hypot(d[:, 0], d[:, 1])
    return RadialProfile(
        center=center,
        mean_radius=float(radii.mean()),
        std_radius=float(radii.std()),
        max_pairwise_distance=max_pairwise_distance(state),
    )


def count_clusters(state: ParticleState, link_distance: float) -> int:
    """Number of single-linkage clusters joining particles closer than link_distance."""
    if not (0.0 < link_distance < 0.5):
        raise ValueError(f"link_distance must lie in (0, 0.5), got {link_distance!r}")
    tree = cKDTree(state.positions, boxsize=1.0)
    pairs = tree.query_pairs(link_distance, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
        shape=(state.n, state.n),
    )
    n_components, _ = connected_components(graph, directed=False)
    return int(n_components)


# --- Steady states ---

def _max_drift(a: ParticleState, b: ParticleState) -> float:
    d = minimum_image(b.positions - a.positions)
    return float(np.hypot(d[:, 0], d[:, 1]).max())


def certify_steady_state(n_lines: int, n_particles: int, force: ForceModel, steps: int = 500) -> SteadyStateCertificate:
    """
    Check that n equidistant vertical lines are fixed under both integrators.

    Uses the vertical homogeneous field and cutoff 0.5.
    """
    model = with_overrides(force, cutoff=0.5)
    field = HomogeneousField(theta0=math.pi / 2)
    drifts = {}
    for integrator in Integrator:
        config = SimConfig(
            n_particles=n_particles, t_end=steps * 0.2, force=model, field=field,
            integrator=integrator, init=LinesInit(n_lines), neighbor=NeighborStrategy.DIRECT,
        )
        start = init_state(config)
        drifts[integrator] = _max_drift(start, integrate(start, config, steps))

    residual = static_residual(start, model, field)
    certificate = SteadyStateCertificate(
        n_lines=n_lines, n_particles=n_particles, force_name=force.name,
        residual=residual, euler_drift=drifts[Integrator.EULER],
        rkdp_drift=drifts[Integrator.RKDP], steps=steps,
    )
    logger.info(
        "Steady state n=%d N=%d %s: residual=%.2e passed=%s",
        n_lines, n_particles, force.name, residual, certificate.passed,
    )
    return certificate


# --- Summaries ---

def summarize(state: ParticleState, force: ForceModel, field: DirectionFieldSpec, *,
              direction_angle: Optional[float] = None,
              gap_threshold: float = DEFAULT_GAP,
              center: Optional[TorusPoint] = None,
              link_distance: Optional[float] = None) -> dict:
    """
    Flat dictionary of diagnostics for one state.

    Line statistics appear when direction_angle is given, radial statistics
    when center is given, cluster counts when link_distance is given.
    """
    summary = {
        "time": state.time,
        "n_particles": state.n,
        "static_residual": static_residual(state, force, field),
    }

    if direction_angle is not None:
        pattern = count_lines(state, direction_angle, gap_threshold)
        summary["n_lines"] = pattern.n_lines
        if pattern.n_lines >= 2:
            summary["spacing_mean"], summary["spacing_std"] = ridge_spacing(pattern)
        else:
            summary["spacing_mean"] = summary["spacing_std"] = math.nan

    if center is not None:
        profile = radial_profile(state, center)
        summary["mean_radius"] = profile.mean_radius
        summary["std_radius"] = profile.std_radius
        summary["radial_cv"] = profile.coefficient_of_variation
        summary["max_pairwise_distance"] = profile.max_pairwise_distance

    if link_distance is not None:
        summary["n_clusters"] = count_clusters(state, link_distance)

    return summary


def format_summary(summary: dict) -> str:
    """Render a summary as key=value lines."""
    lines = []
    for key, value in summary.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def analysis_options(config: SimConfig) -> dict:
    """
    Default summarize options for a run.

    Homogeneous fields get line statistics along the field, circle
    initialisations get a radial profile about the circle centre, and
    curved fields get cluster counts.
    """
    options = {}
    if isinstance(config.field, HomogeneousField):
        options["direction_angle"] = config.field.theta0
    else:
        options["link_distance"] = DEFAULT_LINK
    if isinstance(config.init, CircleInit):
        options["center"] = config.init.center
    return options

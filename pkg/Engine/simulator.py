"""
Particle Simulator Module

Integrates dx_j/dt = (1/N) sum_k F(x_j - x_k, T(x_j)) on the unit torus:
- Initial conditions: uniform random, equiangular circle, equidistant lines
- Net forces by direct summation or by cell lists, bit-identical to each other
- Explicit Euler and fixed-step Dormand-Prince (5th order) time stepping
- Runs with snapshots, tau convergence series and optional early stop

Summation over partners always runs in ascending particle index so that
runs are reproducible and both neighbour strategies agree exactly.
"""

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from direction_field import DirectionFieldSpec, frames
from forces import ForceModel, pair_force_components
from torus import TorusPoint, minimum_image, wrap_positions


logger = logging.getLogger(__name__)

# Upper bound on pair-matrix entries evaluated at once
PAIR_BLOCK = 1 << 18


# --- Errors ---

class DivergenceError(RuntimeError):
    """Raised when a step produces a non-finite position."""

    def __init__(self, message: str, time: float, index: int):
        super().__init__(message)
        self.time = time
        self.index = index


# --- Enums ---

class Integrator(str, Enum):
    EULER = "euler"
    RKDP = "rkdp"


class NeighborStrategy(str, Enum):
    DIRECT = "direct"
    CELL_LIST = "cell_list"


class RunStatus(str, Enum):
    """Outcome of a run."""
    COMPLETE = "complete"
    STOPPED_EARLY = "stopped_early"
    DIVERGED = "diverged"


# --- Initial conditions ---

@dataclass(frozen=True)
class UniformInit:
    seed: int = 0


@dataclass(frozen=True)
class CircleInit:
    center: TorusPoint = TorusPoint(0.5, 0.5)
    radius: float = 0.005

    def __post_init__(self):
        if not (0.0 < self.radius < 0.5):
            raise ValueError(f"Circle radius must lie in (0, 0.5), got {self.radius!r}")


@dataclass(frozen=True)
class LinesInit:
    n_lines: int

    def __post_init__(self):
        if self.n_lines < 1:
            raise ValueError(f"n_lines must be positive, got {self.n_lines!r}")


InitSpec = Union[UniformInit, CircleInit, LinesInit]


# --- State and configuration ---

@dataclass(frozen=True, eq=False)
class ParticleState:
    """Immutable snapshot of N wrapped positions at a time."""
    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ValueError(f"positions must have shape (N, 2), got {positions.shape}")
        if positions.shape[0] < 2:
            raise ValueError("A particle state needs at least two particles")
        if not np.all((positions >= 0.0) & (positions < 1.0)):
            raise ValueError("All positions must be wrapped into [0, 1)")
        if not (self.time >= 0.0):
            raise ValueError(f"time must be nonnegative, got {self.time!r}")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class SimConfig:
    n_particles: int
    t_end: float
    force: ForceModel
    field: DirectionFieldSpec
    dt: float = 0.2
    integrator: Integrator = Integrator.EULER
    init: InitSpec = UniformInit()
    snapshot_interval: Optional[float] = None
    neighbor: NeighborStrategy = NeighborStrategy.CELL_LIST
    stop_epsilon: Optional[float] = None
    stop_window: int = 100

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError(f"n_particles must be at least 2, got {self.n_particles}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.snapshot_interval is None:
            object.__setattr__(self, "snapshot_interval", self.t_end)
        if self.snapshot_interval < self.dt:
            raise ValueError(
                f"snapshot_interval ({self.snapshot_interval}) must be at least dt ({self.dt})"
            )
        if self.stop_epsilon is not None and not (self.stop_epsilon > 0):
            raise ValueError("stop_epsilon must be positive when set")
        if self.stop_window < 1:
            raise ValueError("stop_window must be positive")
        if isinstance(self.init, LinesInit) and self.n_particles % self.init.n_lines != 0:
            raise ValueError(
                f"n_particles ({self.n_particles}) must be divisible by n_lines ({self.init.n_lines})"
            )
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        object.__setattr__(self, "neighbor", NeighborStrategy(self.neighbor))

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def snapshot_every(self) -> int:
        return max(1, round(self.snapshot_interval / self.dt))

    @property
    def seed(self) -> Optional[int]:
        return self.init.seed if isinstance(self.init, UniformInit) else None


@dataclass
class RunReport:
    """Snapshots and tau series of a run. Partial when status is diverged."""
    snapshots: list[tuple[float, ParticleState]]
    tau_series: list[tuple[float, float]]
    wall_time: float
    config_echo: SimConfig
    status: RunStatus = RunStatus.COMPLETE
    error: Optional[str] = None
    seed: Optional[int] = None
    steps_taken: int = 0
    divergence: Optional[DivergenceError] = None

    @property
    def final_state(self) -> ParticleState:
        return self.snapshots[-1][1]

    @property
    def complete(self) -> bool:
        return self.status != RunStatus.DIVERGED


# --- Initialisation ---

def lines_positions(n_lines: int, n_particles: int) -> np.ndarray:
    """n vertical lines at x = i/n, each with N/n equally spaced particles."""
    if n_particles % n_lines != 0:
        raise ValueError(f"n_particles ({n_particles}) must be divisible by n_lines ({n_lines})")
    per_line = n_particles // n_lines
    j = np.arange(n_particles)
    return np.stack([(j // per_line) / n_lines, (j % per_line) / per_line], axis=1)


def init_state(config: SimConfig) -> ParticleState:
    """Initial particle state for a configuration, at time 0."""
    n = config.n_particles
    init = config.init

    if isinstance(init, UniformInit):
        rng = np.random.default_rng(init.seed)
        positions = rng.random((n, 2))
    elif isinstance(init, CircleInit):
        angles = 2.0 * np.pi * np.arange(n) / n
        positions = np.stack([
            init.center.x + init.radius * np.cos(angles),
            init.center.y + init.radius * np.sin(angles),
        ], axis=1)
    elif isinstance(init, LinesInit):
        positions = lines_positions(init.n_lines, n)
    else:
        raise TypeError(f"Unsupported initial condition: {type(init).__name__}")

    return ParticleState(positions=wrap_positions(positions), time=0.0)


# --- Net forces ---

def _row_forces(force: ForceModel, positions, s, l, rows, cols) -> np.ndarray:
    """(1/N) sum over cols, in the given order, of the forces on each row particle."""
    dx = minimum_image(positions[rows, 0][:, None] - positions[cols, 0][None, :])
    dy = minimum_image(positions[rows, 1][:, None] - positions[cols, 1][None, :])
    fx, fy = pair_force_components(
        force, dx, dy,
        s[rows, 0][:, None], s[rows, 1][:, None],
        l[rows, 0][:, None], l[rows, 1][:, None],
    )
    # sequential accumulation: exact zeros from far pairs leave partial sums untouched
    total_x = 0.0 + np.cumsum(fx, axis=1)[:, -1]
    total_y = 0.0 + np.cumsum(fy, axis=1)[:, -1]
    n = positions.shape[0]
    return np.stack([total_x, total_y], axis=1) / n


def _direct(positions, s, l, force: ForceModel) -> np.ndarray:
    n = positions.shape[0]
    cols = np.arange(n)
    block = max(1, PAIR_BLOCK // n)
    out = np.empty((n, 2))
    for start in range(0, n, block):
        rows = cols[start:start + block]
        out[rows] = _row_forces(force, positions, s, l, rows, cols)
    return out


def _cell_list(positions, s, l, force: ForceModel) -> np.ndarray:
    m = int(math.floor(1.0 / force.cutoff))
    if m < 3:
        logger.debug("Cell grid %d < 3 for cutoff %s, using direct summation", m, force.cutoff)
        return _direct(positions, s, l, force)

    cells = np.minimum(np.floor(positions * m).astype(np.int64), m - 1)
    cell_id = cells[:, 0] * m + cells[:, 1]
    order = np.argsort(cell_id, kind="stable")
    counts = np.bincount(cell_id, minlength=m * m)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    def members(cid: int) -> np.ndarray:
        return order[starts[cid]:starts[cid] + counts[cid]]

    out = np.empty((positions.shape[0], 2))
    for cx in range(m):
        for cy in range(m):
            rows = members(cx * m + cy)
            if len(rows) == 0:
                continue
            neighbours = [((cx + a) % m) * m + (cy + b) % m for a in (-1, 0, 1) for b in (-1, 0, 1)]
            cols = np.sort(np.concatenate([members(cid) for cid in neighbours]))
            out[rows] = _row_forces(force, positions, s, l, rows, cols)
    return out


def _frames_at(field: DirectionFieldSpec, positions):
    s, l = frames(field, positions)
    return np.ascontiguousarray(s), np.ascontiguousarray(l)


def net_forces_direct(state: ParticleState, force: ForceModel, field: DirectionFieldSpec) -> np.ndarray:
    """
    Net velocity of every particle by summing over all partners.

    Raises:
        SingularityError carrying the index of a particle sitting on a singularity
    """
    s, l = _frames_at(field, state.positions)
    return _direct(state.positions, s, l, force)


def net_forces_cell_list(state: ParticleState, force: ForceModel, field: DirectionFieldSpec) -> np.ndarray:
    """
    Net velocities scanning only the 3x3 neighbouring cells of each particle.

    Falls back to direct summation when fewer than 3 cells fit per axis.
    """
    s, l = _frames_at(field, state.positions)
    return _cell_list(state.positions, s, l, force)


def net_forces(state: ParticleState, force: ForceModel, field: DirectionFieldSpec,
               neighbor: NeighborStrategy = NeighborStrategy.CELL_LIST) -> np.ndarray:
    if neighbor == NeighborStrategy.DIRECT:
        return net_forces_direct(state, force, field)
    return net_forces_cell_list(state, force, field)


# --- Time stepping ---

# Dormand-Prince tableau; the seventh stage only feeds the error estimate
RKDP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
RKDP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)


def _checked_wrap(raw: np.ndarray, t: float) -> np.ndarray:
    finite = np.isfinite(raw).all(axis=1)
    if not finite.all():
        index = int(np.argmin(finite))
        raise DivergenceError(f"Particle {index} left the domain at t={t}", time=t, index=index)
    return wrap_positions(raw)


def _velocity(positions, config: SimConfig) -> np.ndarray:
    s, l = _frames_at(config.field, positions)
    if config.neighbor == NeighborStrategy.DIRECT:
        return _direct(positions, s, l, config.force)
    return _cell_list(positions, s, l, config.force)


def step(state: ParticleState, config: SimConfig) -> ParticleState:
    """
    Advance one fixed time step.

    Raises:
        DivergenceError if any position becomes non-finite
    """
    x = state.positions
    dt = config.dt
    t_next = state.time + dt

    if config.integrator == Integrator.EULER:
        raw = x + dt * _velocity(x, config)
    else:
        stages = []
        for row in RKDP_A:
            increment = np.zeros_like(x)
            for a, k in zip(row, stages):
                increment = increment + a * k
            stage_x = _checked_wrap(x + dt * increment, state.time) if row else x
            stages.append(_velocity(stage_x, config))
        increment = np.zeros_like(x)
        for b, k in zip(RKDP_B, stages):
            increment = increment + b * k
        raw = x + dt * increment

    return ParticleState(positions=_checked_wrap(raw, t_next), time=t_next)


def integrate(state: ParticleState, config: SimConfig, n_steps: int) -> ParticleState:
    """Apply `step` n_steps times without bookkeeping."""
    for _ in range(n_steps):
        state = step(state, config)
    return state


def tau(prev: ParticleState, curr: ParticleState) -> float:
    """L1 sum of minimum-image displacements between two states."""
    if prev.n != curr.n:
        raise ValueError(f"States have different particle counts: {prev.n} and {curr.n}")
    return float(np.abs(minimum_image(curr.positions - prev.positions)).sum())


SnapshotCallback = Callable[[float, ParticleState], None]


def run(config: SimConfig,
        on_snapshot: Optional[SnapshotCallback] = None,
        initial: Optional[ParticleState] = None) -> RunReport:
    """
    Integrate to t_end, recording snapshots and tau.

    Snapshots are taken at t = 0, every snapshot_interval and at the final
    state. With stop_epsilon set, the run stops once tau/N stays below it for
    stop_window consecutive steps. A divergence ends the run with a partial,
    diverged report instead of raising.
    """
    started = time.perf_counter()
    state = initial if initial is not None else init_state(config)
    if state.n != config.n_particles:
        raise ValueError(f"Initial state has {state.n} particles, config expects {config.n_particles}")

    logger.info(
        "Run: N=%d integrator=%s force=%s field=%s neighbor=%s steps=%d",
        config.n_particles, config.integrator.value, config.force.name,
        type(config.field).__name__, config.neighbor.value, config.n_steps,
    )

    report = RunReport(snapshots=[], tau_series=[], wall_time=0.0, config_echo=config, seed=config.seed)

    def snapshot(s: ParticleState):
        report.snapshots.append((s.time, s))
        if on_snapshot:
            on_snapshot(s.time, s)

    snapshot(state)
    quiet_steps = 0
    last_snapshot_step = 0

    for k in range(1, config.n_steps + 1):
        try:
            nxt = step(state, config)
        except DivergenceError as e:
            logger.error("Run diverged: %s", e)
            report.status = RunStatus.DIVERGED
            report.error = str(e)
            report.divergence = e
            break

        change = tau(state, nxt)
        state = nxt
        report.tau_series.append((state.time, change))
        report.steps_taken = k

        if k % config.snapshot_every == 0:
            snapshot(state)
            last_snapshot_step = k
            logger.info("t=%g tau/N=%.3e", state.time, change / state.n)

        if config.stop_epsilon is not None:
            quiet_steps = quiet_steps + 1 if change / state.n < config.stop_epsilon else 0
            if quiet_steps >= config.stop_window:
                logger.info("Early stop at t=%g after %d quiet steps", state.time, quiet_steps)
                report.status = RunStatus.STOPPED_EARLY
                break

    if report.steps_taken > last_snapshot_step:
        snapshot(state)

    report.wall_time = time.perf_counter() - started
    return report

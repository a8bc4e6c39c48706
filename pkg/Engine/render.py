"""
SVG Rendering Module

Draws unit-square figures with matplotlib:
- particle snapshots, optionally over the field's streamlines
- streamline plots of a direction field
- force coefficient curves
"""

import logging
import threading
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from direction_field import DirectionFieldSpec, trace_streamline
from simulator import ParticleState
from torus import TorusPoint, wrap_positions


logger = logging.getLogger(__name__)

# fixed ids keep repeated renders byte-identical
plt.rcParams["svg.hashsalt"] = "ridge-patterns"
# pyplot state is global; sweeps render from worker threads
_PLOT_LOCK = threading.Lock()

SEEDS_PER_AXIS = 12
STREAM_STEP = 0.004
STREAM_STEPS = 60


def _unit_axes(title: Optional[str] = None):
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    return fig, ax


def _save(fig, path: str) -> str:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def wrapped_polyline(points: np.ndarray) -> np.ndarray:
    """Wrap a planar polyline onto the unit square, with NaN rows where it crosses the seam."""
    wrapped = wrap_positions(points)
    jumps = np.abs(np.diff(wrapped, axis=0)).max(axis=1) > 0.5
    return np.insert(wrapped, np.flatnonzero(jumps) + 1, np.nan, axis=0)


def streamlines(spec: DirectionFieldSpec, seeds_per_axis: int = SEEDS_PER_AXIS,
                step: float = STREAM_STEP, n_steps: int = STREAM_STEPS) -> list[np.ndarray]:
    """Streamlines through a lattice of seeds, traced both ways from each seed."""
    lines = []
    centers = (np.arange(seeds_per_axis) + 0.5) / seeds_per_axis
    for x in centers:
        for y in centers:
            seed = TorusPoint(float(x), float(y))
            ahead = trace_streamline(spec, seed, step, n_steps)
            behind = trace_streamline(spec, seed, step, n_steps, reverse=True)
            lines.append(wrapped_polyline(np.concatenate([behind[::-1], ahead[1:]])))
    return lines


def render_particles(state: ParticleState, path: str,
                     field: Optional[DirectionFieldSpec] = None,
                     title: Optional[str] = None) -> str:
    """Particles as dots; the field's streamlines underneath when given."""
    lines = streamlines(field) if field is not None else []
    with _PLOT_LOCK:
        fig, ax = _unit_axes(title or f"t = {state.time:g}")
        for line in lines:
            ax.plot(line[:, 0], line[:, 1], color="0.8", linewidth=0.5)
        ax.scatter(state.positions[:, 0], state.positions[:, 1], s=2, color="black")
        return _save(fig, path)


def render_field(spec: DirectionFieldSpec, path: str, title: Optional[str] = None) -> str:
    lines = streamlines(spec)
    with _PLOT_LOCK:
        fig, ax = _unit_axes(title)
        for line in lines:
            ax.plot(line[:, 0], line[:, 1], color="tab:blue", linewidth=0.8)
        return _save(fig, path)


def render_coefficients(curve: pd.DataFrame, path: str, title: Optional[str] = None) -> str:
    """Plot f_l and f_s against r."""
    with _PLOT_LOCK:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.axhline(0.0, color="0.6", linewidth=0.5)
        ax.plot(curve["r"], curve["f_l"], label="f_l (largest stress)")
        ax.plot(curve["r"], curve["f_s"], label="f_s (smallest stress)")
        ax.set_xlabel("r")
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)

"""
Artifact Output Module

Writes and reads run artifacts:
- Snapshot CSVs (t,id,x,y) and the tau series (t,tau)
- manifest.json describing how a run was produced
- Analysis tables and key=value summaries

All reals are written with 17 significant digits so CSVs read back
bit-identically.
"""

import glob
import logging
import os
import shutil
from datetime import datetime, timezone
from typing import Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from analysis import format_summary
from config import RunSettings
from render import render_particles
from simulator import ParticleState, RunReport


logger = logging.getLogger(__name__)

ARTIFACT_VERSION = "1"
FLOAT_FORMAT = "%.17g"
MANIFEST_FILE = "manifest.json"
TAU_FILE = "tau.csv"
SNAPSHOT_PATTERN = "snapshot_{:04d}"


class OutputExistsError(OSError):
    """Raised when an output directory is already populated and overwriting was not requested."""
    pass


class RunManifest(BaseModel):
    """How an artifact directory was produced."""
    config_path: Optional[str] = None
    config_text: str
    output_dir: str
    preset: Optional[str] = None
    kind: Literal["run", "experiment"] = "run"
    seed: Optional[int] = None
    status: str = "complete"
    created_at: datetime
    artifact_version: str = ARTIFACT_VERSION


# --- Directories ---

def prepare_output_dir(path: str, force: bool = False) -> str:
    """
    Create an empty output directory.

    Raises:
        OutputExistsError if the directory holds files and force is False
    """
    if os.path.isdir(path) and os.listdir(path):
        if not force:
            raise OutputExistsError(f"Output directory {path} already exists; use --force to overwrite")
        logger.info("Overwriting %s", path)
        shutil.rmtree(path)
    os.makedirs(path, exist_ok=True)
    return path


# --- Tables ---

def write_table(df: pd.DataFrame, path: str) -> str:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_table(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def snapshot_frame(state: ParticleState) -> pd.DataFrame:
    return pd.DataFrame({
        "t": np.full(state.n, state.time),
        "id": np.arange(state.n),
        "x": state.positions[:, 0],
        "y": state.positions[:, 1],
    })


def tau_frame(report: RunReport) -> pd.DataFrame:
    times = [t for t, _ in report.tau_series]
    values = [v for _, v in report.tau_series]
    return pd.DataFrame({"t": times, "tau": values}, columns=["t", "tau"])


def read_snapshot(path: str) -> ParticleState:
    """Rebuild a particle state from a snapshot CSV."""
    df = read_table(path).sort_values("id")
    return ParticleState(positions=df[["x", "y"]].to_numpy(), time=float(df["t"].iloc[0]))


def list_snapshots(run_dir: str) -> list[str]:
    return sorted(glob.glob(os.path.join(run_dir, "snapshot_*.csv")))


# --- Manifest ---

def write_manifest(manifest: RunManifest, out_dir: str) -> str:
    path = os.path.join(out_dir, MANIFEST_FILE)
    with open(path, "w", encoding="utf-8") as f:
        f.write(manifest.model_dump_json(indent=2))
    return path


def read_manifest(run_dir: str) -> RunManifest:
    with open(os.path.join(run_dir, MANIFEST_FILE), "r", encoding="utf-8") as f:
        return RunManifest.model_validate_json(f.read())


def write_summary(summary: dict, path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_summary(summary))
    return path


# --- Runs ---

def write_run(report: RunReport, settings: RunSettings, out_dir: str,
              preset: Optional[str] = None) -> list[str]:
    """
    Write every artifact of a finished (or diverged) run.

    Returns:
        Paths written, manifest first
    """
    sim = settings.sim
    manifest = RunManifest(
        config_path=settings.source,
        config_text=settings.config_text,
        output_dir=out_dir,
        preset=preset,
        seed=report.seed,
        status=report.status.value,
        created_at=datetime.now(timezone.utc),
    )
    written = [write_manifest(manifest, out_dir)]

    for k, (_, state) in enumerate(report.snapshots):
        stem = os.path.join(out_dir, SNAPSHOT_PATTERN.format(k))
        written.append(write_table(snapshot_frame(state), stem + ".csv"))
        if settings.render.svg:
            written.append(render_particles(
                state, stem + ".svg",
                field=sim.field if settings.render.streamlines else None,
            ))

    written.append(write_table(tau_frame(report), os.path.join(out_dir, TAU_FILE)))
    logger.info("Wrote %d artifacts to %s", len(written), out_dir)
    return written

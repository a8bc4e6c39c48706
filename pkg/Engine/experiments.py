"""
Experiment Presets Module

Named sweeps over the standard pattern-formation setups:
- delta_sweep: isotropic force delta*F_A + F_R, ring formation from a circle
- kc_collapse: original parameters over a delta, ridges merging over time
- stationary_delta_core: reduced attraction over a core and a delta
- eta_sweep: ridge spacing under force rescaling
- cutoff_sweep: effect of the cutoff radius on line counts
- steady_state: certification of equidistant line states for every force preset

Each simulation point is described by config entries, so its manifest
carries the full config text and can be rerun with `simulate`.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import pandas as pd

from analysis import analysis_options, certify_steady_state, summarize
from artifacts import RunManifest, prepare_output_dir, read_table, write_run, write_table
from config import ConfigEntries, ConfigError, build_run, merge_entries, parse_config
from forces import FORCE_PRESETS, KC_ORIGINAL_PARAMS, preset as force_preset
from runner import PointState, PointStatus, SweepPoint, SweepRunner
from simulator import RunStatus, run


logger = logging.getLogger(__name__)

ANALYSIS_FILE = "analysis.csv"
VERTICAL = repr(math.pi / 2)
STEADY_STATE_SIZES = ((2, 4), (4, 16), (5, 600))


@dataclass
class ExperimentPlan:
    """Points of one experiment and how to execute them."""
    name: str
    description: str
    points: list[SweepPoint]
    kind: Literal["simulation", "certification"] = "simulation"
    metadata: dict = field(default_factory=dict)


def _entries(**sections: dict) -> ConfigEntries:
    entries = {}
    for name, values in sections.items():
        for key, value in values.items():
            entries[f"{name}.{key}"] = value if isinstance(value, list) else str(value)
    return entries


def split_overrides(items: list[str]) -> tuple[ConfigEntries, Optional[list[float]]]:
    """
    Split CLI overrides into config entries and an optional sweep value list.

    `sweep.values=0.1,0.5` replaces the swept values; everything else must be
    a config key such as `simulation.t_end=100`.
    """
    values = None
    config_lines = []
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"{item}: expected key=value")
        if key.strip() == "sweep.values":
            try:
                values = [float(v) for v in value.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"sweep.values: expected comma-separated numbers, got {value!r}") from None
            if not values:
                raise ConfigError("sweep.values: at least one value is required")
        else:
            config_lines.append(item)
    return parse_config("\n".join(config_lines)), values


def _sweep(name: str, description: str, base: ConfigEntries, overrides: ConfigEntries,
           param: str, values, point_entries: Callable[[float], ConfigEntries],
           metadata: dict) -> ExperimentPlan:
    points = []
    for value in values:
        swept = point_entries(value)
        shadowed = sorted(set(swept) & set(overrides))
        if shadowed:
            logger.warning("Override of swept key(s) %s ignored", ", ".join(shadowed))
        entries = merge_entries(merge_entries(base, overrides), swept)
        points.append(SweepPoint(label=f"{param}_{value:g}", params={param: value}, entries=entries))
    return ExperimentPlan(name=name, description=description, points=points,
                          metadata={**metadata, "values": list(values)})


# --- Presets ---

def delta_sweep(overrides: ConfigEntries, values=None) -> ExperimentPlan:
    base = _entries(
        simulation={"n_particles": 600, "t_end": 20000, "snapshot_interval": 5000, "neighbor": "direct"},
        init={"type": "circle", "center": "0.5 0.5", "radius": 0.005},
        force={"preset": "kc_original", "chi": 1, "cutoff": 0.5},
        field={"type": "homogeneous", "theta0": VERTICAL},
    )
    # chi = 1 makes T the identity, so scaling gamma scales F_A in both channels
    return _sweep(
        "delta_sweep", "Isotropic force delta*F_A + F_R from a small circle",
        base, overrides, "delta", values or (0.1, 0.3, 0.5, 0.7, 0.9),
        lambda delta: {"force.gamma": repr(delta * KC_ORIGINAL_PARAMS.gamma)},
        {"cutoff": 0.5, "attraction": "gamma scaled by delta"},
    )


def kc_collapse(overrides: ConfigEntries, values=None) -> ExperimentPlan:
    base = _entries(
        simulation={"n_particles": 600, "t_end": 400000, "snapshot_interval": 40000},
        init={"type": "uniform", "seed": 0},
        force={"preset": "kc_original", "cutoff": 0.1},
        field={"type": "preset", "preset": "delta"},
    )
    return _sweep(
        "kc_collapse", "Original parameters over a delta: ridges merge over time",
        base, overrides, "gamma", values or (KC_ORIGINAL_PARAMS.gamma,),
        lambda gamma: {"force.gamma": repr(gamma)},
        {"cutoff": 0.1},
    )


def stationary_delta_core(overrides: ConfigEntries, values=None) -> ExperimentPlan:
    base = _entries(
        simulation={"n_particles": 600, "t_end": 400000, "snapshot_interval": 40000},
        init={"type": "uniform", "seed": 0},
        force={"preset": "kc_stationary", "cutoff": 0.1},
        field={"type": "preset", "preset": "loop"},
    )
    return _sweep(
        "stationary_delta_core", "Reduced attraction over a core and a delta",
        base, overrides, "gamma", values or (force_preset("kc_stationary").law.params.gamma,),
        lambda gamma: {"force.gamma": repr(gamma)},
        {"cutoff": 0.1},
    )


def eta_sweep(overrides: ConfigEntries, values=None) -> ExperimentPlan:
    base = _entries(
        simulation={"n_particles": 2400, "t_end": 20000, "snapshot_interval": 5000},
        init={"type": "uniform", "seed": 0},
        force={"preset": "bio_harmonic"},
        field={"type": "homogeneous", "theta0": VERTICAL},
    )
    return _sweep(
        "eta_sweep", "Ridge spacing under force rescaling",
        base, overrides, "eta", values or (0.6, 0.8, 1.0, 1.2),
        lambda eta: {"force.eta": repr(eta)},
        {"cutoff": 0.1},
    )


def cutoff_sweep(overrides: ConfigEntries, values=None) -> ExperimentPlan:
    base = _entries(
        simulation={"n_particles": 600, "t_end": 40000, "snapshot_interval": 10000},
        init={"type": "uniform", "seed": 0},
        force={"preset": "kc_original"},
        field={"type": "preset", "preset": "delta"},
    )
    return _sweep(
        "cutoff_sweep", "Line counts for small cutoff radii",
        base, overrides, "cutoff", values or (0.02, 0.04, 0.06),
        lambda cutoff: {"force.cutoff": repr(cutoff)},
        {},
    )


def steady_state(overrides: ConfigEntries, values=None) -> ExperimentPlan:
    if overrides or values:
        raise ConfigError("steady_state: takes no overrides")
    points = [
        SweepPoint(
            label=f"{name}_n{n_lines}_N{n_particles}",
            params={"preset": name, "n_lines": n_lines, "n_particles": n_particles},
        )
        for name in sorted(FORCE_PRESETS)
        for n_lines, n_particles in STEADY_STATE_SIZES
    ]
    return ExperimentPlan(
        name="steady_state",
        description="Equidistant vertical lines under every force preset, cutoff 0.5",
        points=points,
        kind="certification",
        metadata={"cutoff": 0.5, "steps": 500},
    )


EXPERIMENTS = {
    "delta_sweep": delta_sweep,
    "kc_collapse": kc_collapse,
    "stationary_delta_core": stationary_delta_core,
    "eta_sweep": eta_sweep,
    "cutoff_sweep": cutoff_sweep,
    "steady_state": steady_state,
}


def plan_experiment(name: str, override_items: Optional[list[str]] = None) -> ExperimentPlan:
    """
    Build the plan of a named experiment.

    Raises:
        ConfigError for unknown names or invalid overrides
    """
    builder = EXPERIMENTS.get(name)
    if builder is None:
        raise ConfigError(f"Unknown experiment '{name}'. Valid experiments: {', '.join(EXPERIMENTS)}")
    overrides, values = split_overrides(override_items or [])
    plan = builder(overrides, values)
    # validate every point before anything runs
    for point in plan.points:
        if point.entries:
            build_run(point.entries)
    return plan


# --- Manifests ---

def manifest_items(plan: ExperimentPlan, override_items: list[str]) -> list[str]:
    """
    Override items that rebuild plan, with the swept values spelled out.

    Stored as the config text of an experiment root manifest.
    """
    items = [item for item in override_items if item.partition("=")[0].strip() != "sweep.values"]
    if "values" in plan.metadata:
        items.append("sweep.values=" + ",".join(repr(float(v)) for v in plan.metadata["values"]))
    return items


def plan_from_manifest(manifest: RunManifest) -> tuple[ExperimentPlan, list[str]]:
    """Rebuild the plan recorded in an experiment root manifest, with its override items."""
    if manifest.kind != "experiment" or manifest.preset not in EXPERIMENTS:
        raise ConfigError(f"{manifest.output_dir}: not an experiment manifest")
    items = [line.strip() for line in manifest.config_text.splitlines() if line.strip()]
    return plan_experiment(manifest.preset, items), items


# --- Execution ---

def run_point(plan: ExperimentPlan, point: SweepPoint, out_dir: str) -> dict:
    """
    Simulate one point into its own directory and summarise the final state.

    Raises:
        DivergenceError after writing the partial artifacts of a diverged run
    """
    settings = build_run(point.entries)
    point_dir = prepare_output_dir(os.path.join(out_dir, point.label))
    report = run(settings.sim)
    write_run(report, settings, point_dir, preset=plan.name)

    options = analysis_options(settings.sim)
    rows = [
        summarize(state, settings.sim.force, settings.sim.field, **options)
        for _, state in report.snapshots
    ]
    write_table(pd.DataFrame(rows), os.path.join(point_dir, ANALYSIS_FILE))

    if report.status == RunStatus.DIVERGED:
        raise report.divergence

    final_tau = report.tau_series[-1][1] if report.tau_series else 0.0
    return {
        **point.params,
        "status": report.status.value,
        "steps": report.steps_taken,
        "tau_per_particle": final_tau / settings.sim.n_particles,
        **rows[-1],
    }


def certify_point(point: SweepPoint) -> dict:
    params = point.params
    certificate = certify_steady_state(
        params["n_lines"], params["n_particles"], force_preset(params["preset"])
    )
    return {
        **params,
        "residual": certificate.residual,
        "euler_drift": certificate.euler_drift,
        "rkdp_drift": certificate.rkdp_drift,
        "passed": certificate.passed,
    }


def run_experiment(plan: ExperimentPlan, out_dir: str, max_workers: int = 1,
                   on_status: Optional[Callable[[str, PointState], None]] = None) -> tuple[pd.DataFrame, list[PointState]]:
    """
    Run every point of a plan and write the cross-point analysis table.

    out_dir must already exist and be empty. Failed points appear in the
    table with status error.
    """
    def execute(point: SweepPoint) -> dict:
        if plan.kind == "certification":
            return certify_point(point)
        return run_point(plan, point, out_dir)

    runner = SweepRunner(execute, max_workers=max_workers)
    runner.set_points(plan.points)
    if on_status:
        runner.set_status_callback(on_status)
    states = runner.run_all()

    rows = []
    for point, state in zip(plan.points, states):
        if state.status == PointStatus.SUCCESS:
            rows.append({"point": point.label, **state.summary})
        else:
            rows.append({"point": point.label, **point.params, "status": "error", "error": state.error})

    table = pd.DataFrame(rows)
    write_table(table, os.path.join(out_dir, ANALYSIS_FILE))
    logger.info("Experiment %s: %d points, %d failed", plan.name, len(states), len(runner.failed))
    return table, states


def read_analysis(out_dir: str) -> pd.DataFrame:
    return read_table(os.path.join(out_dir, ANALYSIS_FILE))

"""
Command-Line Entry Point for Ridge Pattern Simulations

Provides:
- simulate: run one configured simulation into an artifact directory
- experiment: run a named sweep with optional key=value overrides, or rerun one from its manifest
- field: render a direction field and sample its angles
- analyze: recompute diagnostics from a run's snapshots
- coefficients: dump and plot the coefficient curves of a force preset

Exit codes: 0 success, 2 configuration or input errors, 3 divergence,
4 I/O errors (including refusal to overwrite an output directory).
"""

import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Optional

import numpy as np
import pandas as pd

from analysis import analysis_options, format_summary, summarize
from artifacts import (
    MANIFEST_FILE, RunManifest, list_snapshots, prepare_output_dir, read_manifest, read_snapshot,
    write_manifest, write_run, write_summary, write_table,
)
from config import (
    ConfigError, FieldSection, RunSettings, build_field, build_run, load_run_config,
    parse_config, parse_config_file, section, validate_section,
)
from direction_field import AngleMapField, dump_angle_map, sample_theta
from experiments import ANALYSIS_FILE, manifest_items, plan_experiment, plan_from_manifest, run_experiment
from forces import coefficient_curve, preset as force_preset
from render import render_coefficients, render_field
from runner import PointStatus
from simulator import DivergenceError, RunStatus, run


logger = logging.getLogger(__name__)


# --- Configuration ---

def _thread_limit() -> int:
    raw = os.environ.get("RIDGE_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        logger.warning("Ignoring RIDGE_THREADS=%r; using 1", raw)
        return 1
    return value


RIDGE_THREADS = _thread_limit()
DEFAULT_RUNS_DIR = "runs"
THETA_GRID = 32

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, DivergenceError):
        return EXIT_DIVERGED
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_CONFIG


# --- Helpers ---

def load_settings(path: str) -> RunSettings:
    """Load a run from a config file, or from the manifest.json of an earlier run."""
    if path.endswith(".json"):
        manifest = read_manifest(os.path.dirname(os.path.abspath(path)))
        if manifest.kind == "experiment":
            raise ConfigError(f"{path} records an experiment, rerun it with `experiment --manifest`")
        base = manifest.config_path or path
        return build_run(
            parse_config(manifest.config_text),
            base_dir=os.path.dirname(os.path.abspath(base)),
            source=manifest.config_path,
        )
    return load_run_config(path)


def _default_out(name: str) -> str:
    return os.path.join(DEFAULT_RUNS_DIR, name)


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


# --- Commands ---

def cmd_simulate(args) -> int:
    settings = load_settings(args.config)
    out_dir = prepare_output_dir(args.out or _default_out(_stem(args.config)), args.force)

    report = run(settings.sim)
    written = write_run(report, settings, out_dir)

    if report.status == RunStatus.DIVERGED:
        print(f"error: simulation diverged: {report.error}", file=sys.stderr)
        print(f"partial results in {out_dir}", file=sys.stderr)
        return EXIT_DIVERGED

    print(f"{report.status.value}: {report.steps_taken} steps in {report.wall_time:.1f}s, "
          f"{len(written)} files written to {out_dir}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.manifest:
        if args.name or args.overrides:
            raise ConfigError("--manifest reruns a recorded experiment and takes no name or overrides")
        plan, items = plan_from_manifest(read_manifest(os.path.dirname(os.path.abspath(args.manifest))))
    elif args.name:
        items = args.overrides
        plan = plan_experiment(args.name, items)
    else:
        raise ConfigError("experiment needs a name or --manifest")

    out_dir = prepare_output_dir(args.out or _default_out(plan.name), args.force)
    config_items = manifest_items(plan, items)
    write_manifest(RunManifest(
        config_text="".join(f"{item}\n" for item in config_items),
        output_dir=out_dir,
        preset=plan.name,
        kind="experiment",
        created_at=datetime.now(timezone.utc),
    ), out_dir)

    def report_status(label, state):
        if state.status == PointStatus.ERROR:
            print(f"{label}: error: {state.error}", file=sys.stderr)

    table, states = run_experiment(plan, out_dir, max_workers=RIDGE_THREADS, on_status=report_status)
    failures = [s for s in states if s.status == PointStatus.ERROR]
    if failures:
        return max(exit_code_for(s.exception) for s in failures)

    print(f"{plan.name}: {len(states)} points, analysis in {os.path.join(out_dir, ANALYSIS_FILE)}")
    return EXIT_OK


def cmd_field(args) -> int:
    entries = parse_config_file(args.config)
    spec = validate_section(FieldSection, "field", section(entries, "field"))
    field = build_field(spec, os.path.dirname(os.path.abspath(args.config)))

    # angle maps are re-sampled on their own grid unless a size is given
    if isinstance(field, AngleMapField):
        width, height = field.grid.width, field.grid.height
    else:
        width = height = THETA_GRID
    width = args.width if args.width is not None else width
    height = args.height if args.height is not None else height

    out_dir = prepare_output_dir(args.out, args.force)
    grid = sample_theta(field, width, height)
    render_field(field, os.path.join(out_dir, "field.svg"), title=f"{spec.type} field")

    xs = (np.arange(grid.width) + 0.5) / grid.width
    ys = (np.arange(grid.height) + 0.5) / grid.height
    gx, gy = np.meshgrid(xs, ys)
    write_table(
        pd.DataFrame({"x": gx.ravel(), "y": gy.ravel(), "theta": grid.theta.ravel()}),
        os.path.join(out_dir, "theta.csv"),
    )
    with open(os.path.join(out_dir, "theta.txt"), "w", encoding="utf-8") as f:
        f.write(dump_angle_map(grid))

    print(f"field written to {out_dir}")
    return EXIT_OK


def _analyze_run(run_dir: str) -> dict:
    settings = load_settings(os.path.join(run_dir, MANIFEST_FILE))
    snapshots = list_snapshots(run_dir)
    if not snapshots:
        raise FileNotFoundError(f"No snapshots in {run_dir}")

    sim = settings.sim
    options = analysis_options(sim)
    rows = [summarize(read_snapshot(path), sim.force, sim.field, **options) for path in snapshots]
    write_table(pd.DataFrame(rows), os.path.join(run_dir, ANALYSIS_FILE))
    write_summary(rows[-1], os.path.join(run_dir, "summary.txt"))
    return rows[-1]


def cmd_analyze(args) -> int:
    if read_manifest(args.run).kind != "experiment":
        print(format_summary(_analyze_run(args.run)), end="")
        return EXIT_OK

    point_dirs = sorted(
        name for name in os.listdir(args.run)
        if os.path.isfile(os.path.join(args.run, name, MANIFEST_FILE))
    )
    if not point_dirs:
        raise FileNotFoundError(f"No simulation points in experiment {args.run}")
    for name in point_dirs:
        summary = _analyze_run(os.path.join(args.run, name))
        print(f"[{name}]")
        print(format_summary(summary), end="")
    return EXIT_OK


def cmd_coefficients(args) -> int:
    model = force_preset(args.preset)
    out_dir = prepare_output_dir(args.out, args.force)
    curve = coefficient_curve(model, samples=args.samples)
    write_table(curve, os.path.join(out_dir, "coefficients.csv"))
    render_coefficients(curve, os.path.join(out_dir, "coefficients.svg"), title=model.name)
    print(f"coefficients of {model.name} written to {out_dir}")
    return EXIT_OK


# --- Argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ridges", description="Anisotropic particle ridge simulations")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run one simulation")
    simulate.add_argument("--config", required=True, help="config file or manifest.json of an earlier run")
    simulate.add_argument("--out", help="output directory (default runs/<config name>)")
    simulate.add_argument("--force", action="store_true", help="overwrite an existing output directory")
    simulate.set_defaults(handler=cmd_simulate)

    experiment = commands.add_parser("experiment", help="run a named experiment sweep")
    experiment.add_argument("name", nargs="?", help="experiment preset")
    experiment.add_argument("overrides", nargs="*", help="key=value config overrides, or sweep.values=a,b,c")
    experiment.add_argument("--manifest", help="manifest.json of an earlier experiment to rerun")
    experiment.add_argument("--out")
    experiment.add_argument("--force", action="store_true")
    experiment.set_defaults(handler=cmd_experiment)

    field = commands.add_parser("field", help="render a direction field")
    field.add_argument("--config", required=True)
    field.add_argument("--out", required=True)
    field.add_argument("--width", type=int, help="grid width (default: angle map width, else 32)")
    field.add_argument("--height", type=int, help="grid height (default: angle map height, else 32)")
    field.add_argument("--force", action="store_true")
    field.set_defaults(handler=cmd_field)

    analyze = commands.add_parser("analyze", help="recompute analysis from a run directory")
    analyze.add_argument("--run", required=True)
    analyze.set_defaults(handler=cmd_analyze)

    coefficients = commands.add_parser("coefficients", help="dump force coefficient curves")
    coefficients.add_argument("--preset", required=True)
    coefficients.add_argument("--out", required=True)
    coefficients.add_argument("--samples", type=int, default=501)
    coefficients.add_argument("--force", action="store_true")
    coefficients.set_defaults(handler=cmd_coefficients)

    return parser


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    """Parse a command line; experiment overrides may also follow its options."""
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    if extras:
        if args.command != "experiment" or any(item.startswith("-") for item in extras):
            parser.error(f"unrecognized arguments: {' '.join(extras)}")
        args.overrides = args.overrides + extras
    return args


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (ValueError, LookupError, OSError, DivergenceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())

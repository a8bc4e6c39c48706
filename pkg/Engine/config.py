"""
Run Configuration Module

Parses run config files made of `key = value` lines:
    simulation.n_particles = 600
    force.preset = kc_stationary
    field.type = singularities
    field.singularity = delta 0.5 0.5

Keys carry a dotted section prefix. `#` starts a comment. List keys
(field.singularity, field.region) append when repeated; any other repeated
key is an error. Sections are validated by pydantic models and assembled
into a SimConfig.
"""

import logging
import math
import os
import re
from dataclasses import dataclass
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from direction_field import (
    AngleMapField, HomogeneousField, PiecewiseField, Region, Singularity,
    SingularityField, SingularityKind, field_preset, load_angle_map_file,
)
from forces import preset as force_preset, with_overrides
from simulator import (
    CircleInit, Integrator, LinesInit, NeighborStrategy, SimConfig, UniformInit,
)
from torus import TorusPoint


logger = logging.getLogger(__name__)

SECTIONS = ("simulation", "init", "force", "field", "render")
LIST_KEYS = frozenset({"field.singularity", "field.region"})

ConfigValue = Union[str, list[str]]
ConfigEntries = dict[str, ConfigValue]

# key = value, key made of dotted identifiers
ENTRY_PATTERN = re.compile(r'^\s*([A-Za-z_]\w*(?:\.[A-Za-z_]\w*)+)\s*=\s*(.*?)\s*$')


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration. Messages name the dotted key."""
    pass


# --- Parsing ---

def parse_config(content: str) -> ConfigEntries:
    """
    Parse config text into an ordered mapping.

    Args:
        content: Raw config file text

    Returns:
        Dictionary of dotted key to value; list keys map to lists

    Raises:
        ConfigError on malformed lines, unknown sections or repeated keys
    """
    entries: ConfigEntries = {}

    for line_no, line in enumerate(content.splitlines(), start=1):
        stripped = line.split('#', 1)[0].strip()
        if not stripped:
            continue

        match = ENTRY_PATTERN.match(stripped)
        if not match:
            raise ConfigError(f"line {line_no}: expected 'section.key = value', got {line.strip()!r}")

        key, value = match.group(1), match.group(2)
        section = key.split('.', 1)[0]
        if section not in SECTIONS:
            raise ConfigError(f"{key}: unknown section '{section}' (valid: {', '.join(SECTIONS)})")

        if key in LIST_KEYS:
            entries.setdefault(key, []).append(value)
        elif key in entries:
            raise ConfigError(f"{key}: repeated key (line {line_no})")
        else:
            entries[key] = value

    return entries


def parse_config_file(filepath: str) -> ConfigEntries:
    with open(filepath, 'r', encoding='utf-8') as f:
        return parse_config(f.read())


def serialize_config(entries: ConfigEntries) -> str:
    """Canonical text of a config: one line per value, sections in file order."""
    lines = []
    for key, value in entries.items():
        values = value if isinstance(value, list) else [value]
        lines.extend(f"{key} = {v}" for v in values)
    return '\n'.join(lines) + '\n' if lines else ""


def merge_entries(base: ConfigEntries, overrides: ConfigEntries) -> ConfigEntries:
    """Overlay entries; list keys are replaced as a whole."""
    merged = dict(base)
    for key, value in overrides.items():
        merged[key] = list(value) if isinstance(value, list) else value
    return merged


def section(entries: ConfigEntries, name: str) -> dict[str, ConfigValue]:
    prefix = f"{name}."
    return {key[len(prefix):]: value for key, value in entries.items() if key.startswith(prefix)}


# --- Section models ---

class SimulationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_particles: int = Field(ge=2)
    t_end: float = Field(gt=0)
    dt: float = Field(0.2, gt=0)
    integrator: Integrator = Integrator.EULER
    snapshot_interval: Optional[float] = Field(None, gt=0)
    neighbor: NeighborStrategy = NeighborStrategy.CELL_LIST
    stop_epsilon: Optional[float] = Field(None, gt=0)
    stop_window: int = Field(100, ge=1)


class InitSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["uniform", "circle", "lines"] = "uniform"
    seed: int = Field(0, ge=0)
    center: str = "0.5 0.5"
    radius: float = Field(0.005, gt=0, lt=0.5)
    n_lines: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def lines_need_count(self):
        if self.type == "lines" and self.n_lines is None:
            raise ValueError("n_lines is required for lines initialisation")
        return self


class ForceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: str
    eta: Optional[float] = Field(None, gt=0)
    cutoff: Optional[float] = Field(None, gt=0, le=0.5)
    chi: Optional[float] = Field(None, ge=0, le=1)
    attraction_scale: Optional[float] = Field(None, ge=0)
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    e_a: Optional[float] = None
    e_r: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    c: Optional[float] = None
    c_s: Optional[float] = None
    c_l: Optional[float] = None
    e_s1: Optional[float] = None
    e_s2: Optional[float] = None
    e_l1: Optional[float] = None
    e_l2: Optional[float] = None
    a_s: Optional[float] = None
    a_l: Optional[float] = None

    def overrides(self) -> dict[str, float]:
        return self.model_dump(exclude={"preset"}, exclude_none=True)


class FieldSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["homogeneous", "singularities", "piecewise", "angle_map", "preset"] = "homogeneous"
    theta0: float = 0.0
    singularity: list[str] = []
    region: list[str] = []
    path: Optional[str] = None
    preset: Optional[str] = None


class RenderSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    streamlines: bool = False
    svg: bool = True


@dataclass
class RunSettings:
    """A validated run: the simulation config plus render options and canonical text."""
    sim: SimConfig
    render: RenderSection
    config_text: str
    source: Optional[str] = None


def validate_section(model: type[BaseModel], name: str, values: dict) -> BaseModel:
    try:
        return model.model_validate(values)
    except ValidationError as e:
        problems = []
        for error in e.errors():
            loc = '.'.join(str(part) for part in error["loc"])
            problems.append(f"{name}.{loc}: {error['msg']}" if loc else f"{name}: {error['msg']}")
        raise ConfigError('; '.join(problems)) from None


# --- Assembly ---

def _floats(text: str, count: int, key: str) -> list[float]:
    parts = text.split()
    if len(parts) != count:
        raise ConfigError(f"{key}: expected {count} numbers, got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{key}: values must be finite, got {text!r}")
    return values


def _point(x: float, y: float, key: str) -> TorusPoint:
    try:
        return TorusPoint(x, y)
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from None


def build_field(spec: FieldSection, base_dir: str):
    """Direction field described by a field section."""
    if spec.type == "homogeneous":
        return HomogeneousField(theta0=spec.theta0)

    if spec.type == "singularities":
        if not spec.singularity:
            raise ConfigError("field.singularity: at least one singularity is required")
        singularities = []
        for text in spec.singularity:
            parts = text.split(None, 1)
            try:
                kind = SingularityKind(parts[0].lower())
            except (ValueError, IndexError):
                raise ConfigError(f"field.singularity: expected 'core|delta X Y', got {text!r}") from None
            x, y = _floats(parts[1] if len(parts) > 1 else "", 2, "field.singularity")
            singularities.append(Singularity(position=_point(x, y, "field.singularity"), kind=kind))
        return SingularityField(tuple(singularities), theta0=spec.theta0)

    if spec.type == "piecewise":
        try:
            regions = tuple(Region(*_floats(text, 5, "field.region")) for text in spec.region)
            return PiecewiseField(regions)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"field.region: {e}") from None

    if spec.type == "angle_map":
        if not spec.path:
            raise ConfigError("field.path: required for angle_map fields")
        path = spec.path if os.path.isabs(spec.path) else os.path.join(base_dir, spec.path)
        return AngleMapField(load_angle_map_file(path))

    if not spec.preset:
        raise ConfigError("field.preset: required for preset fields")
    return field_preset(spec.preset)


def _build_init(spec: InitSection):
    if spec.type == "uniform":
        return UniformInit(seed=spec.seed)
    if spec.type == "circle":
        x, y = _floats(spec.center, 2, "init.center")
        return CircleInit(center=_point(x, y, "init.center"), radius=spec.radius)
    return LinesInit(n_lines=spec.n_lines)


def build_run(entries: ConfigEntries, base_dir: str = ".", source: Optional[str] = None) -> RunSettings:
    """
    Validate parsed entries and assemble the run.

    Raises:
        ConfigError for invalid values
        UnknownPresetError for unknown force or field presets
        AngleMapError for malformed angle maps
    """
    sim_section = validate_section(SimulationSection, "simulation", section(entries, "simulation"))
    init_section = validate_section(InitSection, "init", section(entries, "init"))
    force_section = validate_section(ForceSection, "force", section(entries, "force"))
    field_section = validate_section(FieldSection, "field", section(entries, "field"))
    render_section = validate_section(RenderSection, "render", section(entries, "render"))

    force = force_preset(force_section.preset)
    try:
        force = with_overrides(force, **force_section.overrides())
    except ValueError as e:
        raise ConfigError(f"force: {e}") from None

    field = build_field(field_section, base_dir)

    try:
        sim = SimConfig(
            force=force,
            field=field,
            init=_build_init(init_section),
            **sim_section.model_dump(),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"simulation: {e}") from None

    return RunSettings(sim=sim, render=render_section, config_text=serialize_config(entries), source=source)


def load_run_config(filepath: str) -> RunSettings:
    """Parse, validate and assemble a config file; relative paths resolve against its directory."""
    entries = parse_config_file(filepath)
    logger.debug("Loaded %d config entries from %s", len(entries), filepath)
    path = os.path.abspath(filepath)
    return build_run(entries, base_dir=os.path.dirname(path), source=path)

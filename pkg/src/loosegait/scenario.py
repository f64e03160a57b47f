"""Scenario files: sectioned ``key = value`` text mapped onto dataclasses.

Sections are ``terrain``, ``material``, ``vegetation``, ``character``,
``controller``, ``gait`` and ``run``; every key is optional and unknown keys
are rejected. Lengths are meters, times seconds, angles radians. Keys whose
default depends on other values (leg lengths scale with ``total_height``,
material coefficients come from the named preset) may be left out or set to
``auto``; :func:`resolve` fills them in so a dumped scenario is fully explicit.
"""
from __future__ import annotations

import configparser
import io
import math
import types
import typing
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .gait import GaitState, Morphology

SECTIONS = ("terrain", "material", "vegetation", "character", "controller", "gait", "run")


class ScenarioError(ValueError):
    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


@dataclass
class TerrainConfig:
    size_x: float = 10.0
    size_z: float = 10.0
    resolution: int = 512  # cells along x; z follows the aspect ratio
    slope: float = 0.0     # rising along +x
    noise_amp: float = 0.0
    noise_seed: int = 0
    noise_lattice: float = 1.0

    @property
    def cell_size(self) -> float:
        return self.size_x / self.resolution

    @property
    def nz(self) -> int:
        return max(2, int(round(self.size_z / self.cell_size)))


@dataclass
class MaterialConfig:
    preset: str = "mud"
    depth: float | None = None
    compression: float | None = None
    smoothness: float | None = None
    max_print_depth: float = 0.08


@dataclass
class VegetationConfig:
    class_height: float = 0.0  # 0 means bare ground
    density: float = 60.0      # blades per square meter
    seed: int = 1
    x_start: float = 0.0
    x_end: float | None = None
    strip_half_width: float = 0.75
    t_max: float = 0.3
    gamma: float = 1.5
    collapse: str = "fall"     # fall | instant
    collapse_speed: float = 2.0
    min_beta: float = 4.0
    height_jitter: float = 0.2


@dataclass
class CharacterConfig:
    total_height: float = 1.7
    leg_upper: float | None = None
    leg_lower: float | None = None
    hip_spacing: float | None = None
    pelvis_height: float | None = None
    foot_half_length: float | None = None
    foot_half_width: float | None = None
    com_height_offset: float | None = None
    mass: float = 70.0
    inertia: float = 4.0
    initial_tilt: float = 0.0
    initial_angular_velocity: float = 0.0


@dataclass
class ControllerConfig:
    alpha: float = 30.0
    beta: float = 6.0
    angular_drag: float = 10.0


@dataclass
class GaitConfig:
    step_length: float | None = None
    cycle_duration: float | None = None
    swing_apex: float | None = None


@dataclass
class RunConfig:
    duration: float = 10.0
    dt: float = 1.0 / 60.0
    start_offset: float = 1.0
    lane_z: float | None = None
    blade_table_every: int = 0  # frames between blade tables, 0 = first/last only


@dataclass
class Scenario:
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    vegetation: VegetationConfig = field(default_factory=VegetationConfig)
    character: CharacterConfig = field(default_factory=CharacterConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    gait: GaitConfig = field(default_factory=GaitConfig)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def frames(self) -> int:
        return int(round(self.run.duration / self.run.dt))

    @property
    def has_vegetation(self) -> bool:
        return self.vegetation.class_height > 0.0

    def morphology(self) -> Morphology:
        c = self.character
        return Morphology(c.leg_upper, c.leg_lower, c.hip_spacing, c.pelvis_height,
                          c.total_height, c.foot_half_length, c.foot_half_width)


def load_presets() -> dict[str, dict[str, float | str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string(resources.files("loosegait").joinpath("data/materials.ini").read_text())
    presets = {}
    for name in parser.sections():
        sec = parser[name]
        presets[name] = {
            "depth": float(sec["depth"]),
            "compression": float(sec["compression"]),
            "smoothness": float(sec["smoothness"]),
            "note": sec.get("note", ""),
        }
    return presets


def _convert(where: str, raw: str, tp):
    raw = raw.strip()
    optional = typing.get_origin(tp) in (typing.Union, types.UnionType)
    if optional:
        if raw.lower() in ("", "auto", "none"):
            return None
        tp = next(a for a in typing.get_args(tp) if a is not type(None))
    try:
        if tp is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if tp is int:
            return int(raw)
    except ValueError:
        kind = "a number" if tp is float else "an integer"
        raise ScenarioError(where, f"expected {kind}, got {raw!r}") from None
    return raw


def _section_types(cls) -> dict[str, object]:
    return typing.get_type_hints(cls)


def parse_scenario(text: str, overrides: list[str] | tuple[str, ...] = ()) -> Scenario:
    """Parse scenario text, apply ``section.key=value`` overrides, resolve, validate."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError("scenario", str(exc).splitlines()[0]) from None

    for sec in parser.sections():
        if sec not in SECTIONS:
            raise ScenarioError(sec, "unknown section")
    for item in overrides:
        path, sep, value = item.partition("=")
        sec, dot, key = path.strip().partition(".")
        if not sep or not dot:
            raise ScenarioError(item, "override must look like section.key=value")
        if sec not in SECTIONS:
            raise ScenarioError(path.strip(), "unknown section")
        if key not in _section_types(type(getattr(Scenario(), sec))):
            raise ScenarioError(path.strip(), "unknown key")
        if not parser.has_section(sec):
            parser.add_section(sec)
        parser[sec][key] = value

    sections = {}
    for name in SECTIONS:
        cls = type(getattr(Scenario(), name))
        hints = _section_types(cls)
        values = {}
        if parser.has_section(name):
            for key, raw in parser[name].items():
                if key not in hints:
                    raise ScenarioError(f"{name}.{key}", "unknown key")
                values[key] = _convert(f"{name}.{key}", raw, hints[key])
        sections[name] = cls(**values)
    scenario = resolve(Scenario(**sections))
    validate(scenario)
    return scenario


def load_scenario(path: str | Path, overrides: list[str] | tuple[str, ...] = ()) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(str(path), exc.strerror or "cannot read file") from None
    return parse_scenario(text, overrides)


def resolve(sc: Scenario) -> Scenario:
    """Fill every derived default so the scenario is fully explicit."""
    c = sc.character
    k = c.total_height / 1.7 if c.total_height > 0 else 1.0
    base = Morphology.for_height(c.total_height) if c.total_height > 0 else Morphology()
    character = replace(
        c,
        leg_upper=base.leg_upper if c.leg_upper is None else c.leg_upper,
        leg_lower=base.leg_lower if c.leg_lower is None else c.leg_lower,
        hip_spacing=base.hip_spacing if c.hip_spacing is None else c.hip_spacing,
        pelvis_height=base.pelvis_height if c.pelvis_height is None else c.pelvis_height,
        foot_half_length=base.foot_half_length if c.foot_half_length is None else c.foot_half_length,
        foot_half_width=base.foot_half_width if c.foot_half_width is None else c.foot_half_width,
        com_height_offset=0.3 * k if c.com_height_offset is None else c.com_height_offset,
    )
    g = sc.gait
    gbase = GaitState.for_height(c.total_height) if c.total_height > 0 else GaitState()
    gait = replace(
        g,
        step_length=gbase.step_length if g.step_length is None else g.step_length,
        cycle_duration=gbase.cycle_duration if g.cycle_duration is None else g.cycle_duration,
        swing_apex=gbase.swing_apex if g.swing_apex is None else g.swing_apex,
    )
    m = sc.material
    preset = load_presets().get(m.preset)
    if preset is not None:
        m = replace(
            m,
            depth=preset["depth"] if m.depth is None else m.depth,
            compression=preset["compression"] if m.compression is None else m.compression,
            smoothness=preset["smoothness"] if m.smoothness is None else m.smoothness,
        )
    v = sc.vegetation
    if v.x_end is None:
        v = replace(v, x_end=sc.terrain.size_x)
    r = sc.run
    if r.lane_z is None:
        r = replace(r, lane_z=0.5 * sc.terrain.size_z)
    return replace(sc, character=character, gait=gait, material=m, vegetation=v, run=r)


def validate(sc: Scenario) -> None:
    t = sc.terrain
    if not (t.size_x > 0 and t.size_z > 0):
        raise ScenarioError("terrain.size_x", "terrain sizes must be positive")
    if t.resolution < 2:
        raise ScenarioError("terrain.resolution", "need at least 2 cells")
    if abs(t.slope) >= math.pi / 2 or abs(math.tan(t.slope)) * t.size_x + abs(t.noise_amp) > 100.0:
        raise ScenarioError("terrain.slope", "heights would leave the +-100 m range")
    if t.noise_lattice <= 0:
        raise ScenarioError("terrain.noise_lattice", "must be positive")

    m = sc.material
    if m.preset not in load_presets():
        raise ScenarioError("material.preset", f"unknown preset {m.preset!r}")
    for key in ("depth", "compression"):
        if getattr(m, key) < 0:
            raise ScenarioError(f"material.{key}", "must be non-negative")
    if not 0.0 <= m.smoothness <= 1.0:
        raise ScenarioError("material.smoothness", "must lie in [0, 1]")
    if m.max_print_depth < 0:
        raise ScenarioError("material.max_print_depth", "must be non-negative")

    v = sc.vegetation
    if v.class_height < 0:
        raise ScenarioError("vegetation.class_height", "must be non-negative")
    if v.density < 0:
        raise ScenarioError("vegetation.density", "must be non-negative")
    if not (v.t_max > 0 and v.gamma > 0):
        raise ScenarioError("vegetation.t_max", "t_max and gamma must be positive")
    if v.collapse not in ("fall", "instant"):
        raise ScenarioError("vegetation.collapse", "must be 'fall' or 'instant'")
    if v.collapse == "fall" and not v.collapse_speed > 0:
        raise ScenarioError("vegetation.collapse_speed", "must be positive")
    if not 0.0 <= v.height_jitter < 1.0:
        raise ScenarioError("vegetation.height_jitter", "must lie in [0, 1)")

    c = sc.character
    if not c.total_height > 0:
        raise ScenarioError("character.total_height", "must be positive")
    if not (c.mass > 0 and c.inertia > 0):
        raise ScenarioError("character.mass", "mass and inertia must be positive")
    if c.com_height_offset < 0:
        raise ScenarioError("character.com_height_offset", "must be non-negative")
    if abs(c.initial_tilt) >= math.pi / 2:
        raise ScenarioError("character.initial_tilt", "must be within (-pi/2, pi/2)")
    try:
        morph = sc.morphology()
    except ValueError as exc:
        raise ScenarioError("character", str(exc)) from None

    if sc.controller.alpha < 0:
        raise ScenarioError("controller.alpha", "must be non-negative")
    if sc.controller.angular_drag < 0:
        raise ScenarioError("controller.angular_drag", "must be non-negative")

    g = sc.gait
    for key in ("step_length", "cycle_duration"):
        if not getattr(g, key) > 0:
            raise ScenarioError(f"gait.{key}", "must be positive")
    if g.swing_apex < 0:
        raise ScenarioError("gait.swing_apex", "must be non-negative")
    try:
        morph.stand_height(g.step_length)
    except ValueError as exc:
        raise ScenarioError("gait.step_length", str(exc)) from None

    r = sc.run
    if not r.duration > 0:
        raise ScenarioError("run.duration", "must be positive")
    if not r.dt > 0:
        raise ScenarioError("run.dt", "must be positive")
    if r.blade_table_every < 0:
        raise ScenarioError("run.blade_table_every", "must be non-negative")
    half_step = 0.5 * g.step_length + morph.foot_half_length
    if not half_step <= r.start_offset <= t.size_x - half_step:
        raise ScenarioError("run.start_offset", "start position leaves the feet off the terrain")
    if not 0.0 < r.lane_z < t.size_z:
        raise ScenarioError("run.lane_z", "walking lane must lie on the terrain")


def dump_scenario(sc: Scenario) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name in SECTIONS:
        section = getattr(sc, name)
        parser.add_section(name)
        for f in fields(section):
            value = getattr(section, f.name)
            parser[name][f.name] = "auto" if value is None else (
                repr(value) if isinstance(value, float) else str(value))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


"""Fixed-timestep orchestration of the character layers and trace output."""
from __future__ import annotations

import math
import os
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import export
from .controller import (BodyState, ControllerParams, FallOver, compute_support,
                         compute_torque, gravity_torque, ik_offset_correction,
                         integrate_body)
from .gait import (EventKind, Foot, FootSample, GaitState, Morphology, Surface,
                   advance_gait, foot_contact_events, forward_kinematics, half_cycles_crossed,
                   solve_two_bone_ik, stance_target, swing_target)
from .geometry import GRAVITY, Vec3, frame_from_velocity
from .heightfield import (FootprintStamp, HeightField, TerrainMaterial, generate_slope,
                          sample_height, stamp_footprint, total_volume)
from .scenario import Scenario, dump_scenario, validate
from .vegetation import (DeformParams, SwingInfo, VegetationLayer, VirtualPlatform,
                         beta_for_vegetation, deform_blades, generate_vegetation,
                         update_platform)

TRACE_MODE_ENV = "LOOSEGAIT_TRACE_MODE"  # "deterministic" strips timing columns
ROOT_STIFFNESS = 400.0
ROOT_DAMPING = 40.0


class EdgeReached(Exception):
    """The next footstep would land off the terrain."""


@dataclass(frozen=True)
class Layers:
    """Switches for the interaction layers; both off gives the rigid baseline."""

    terrain_deformation: bool = True
    vegetation: bool = True


@dataclass
class FootState:
    foot: Foot
    plant: Vec3
    swing_start: Vec3
    landing: Vec3
    position: Vec3
    target: Vec3
    lateral: float
    sample: FootSample
    sole_height: float | None = None
    platform: VirtualPlatform | None = None
    clamped: bool = False

    @property
    def contact(self) -> bool:
        return self.sample.in_contact

    @property
    def platform_height(self) -> float | None:
        if self.platform is None or not self.platform.active:
            return None
        return self.platform.height


@dataclass(frozen=True)
class FrameTrace:
    frame: int
    time: float
    com: Vec3
    tilt: float
    angular_velocity: float
    torque: float
    beta: float
    phase: float
    stance: Foot
    feet: tuple[tuple, tuple]  # per foot: position, target, contact, platform state, height
    carved: float
    deposited: float
    step_ms: float = 0.0


@dataclass
class World:
    scenario: Scenario
    hf: HeightField
    material: TerrainMaterial
    morph: Morphology
    params: ControllerParams
    gait: GaitState
    body: BodyState
    feet: dict[Foot, FootState]
    vegetation: VegetationLayer | None
    deform: DeformParams
    layers: Layers
    stand_height: float
    x_start: float
    frame: int = 0
    time: float = 0.0
    forward: Vec3 = Vec3(1.0, 0.0, 0.0)
    pending_touchdowns: set = field(default_factory=set)
    trace: list[FrameTrace] = field(default_factory=list)

    @property
    def dt(self) -> float:
        return self.scenario.run.dt


def build_material(sc: Scenario) -> TerrainMaterial:
    m = sc.material
    return TerrainMaterial(m.preset, m.depth, m.compression, m.smoothness)


def build_terrain(sc: Scenario) -> HeightField:
    t = sc.terrain
    return generate_slope(t.resolution, t.nz, t.cell_size, t.slope, t.noise_seed,
                          t.noise_amp, t.noise_lattice)


def init_world(sc: Scenario, layers: Layers = Layers()) -> World:
    validate(sc)
    hf = build_terrain(sc)
    morph = sc.morphology()
    g = sc.gait
    gait = GaitState(0.0, Foot.LEFT, g.step_length, g.cycle_duration, g.swing_apex)
    forward = Vec3(1.0, 0.0, 0.0)
    lane = sc.run.lane_z
    x0 = sc.run.start_offset
    half = 0.5 * gait.step_length

    def ground(x, z):
        return Vec3(x, sample_height(hf, x, z), z)

    feet = {}
    for foot, dx, dz in ((Foot.LEFT, half, -0.5 * morph.hip_spacing),
                         (Foot.RIGHT, -half, 0.5 * morph.hip_spacing)):
        plant = ground(x0 + dx, lane + dz)
        feet[foot] = FootState(foot, plant, plant, plant, plant, plant, dz,
                               FootSample(plant.y, plant.y), sole_height=plant.y)
    # right foot starts its swing toward one step past the left foot
    right = feet[Foot.RIGHT]
    right.landing = ground(feet[Foot.LEFT].plant.x + gait.step_length, right.plant.z)

    vegetation = None
    if sc.has_vegetation and layers.vegetation:
        v = sc.vegetation
        vegetation = generate_vegetation(
            hf, v.class_height, v.density, v.seed, (v.x_start, v.x_end),
            (lane - v.strip_half_width, lane + v.strip_half_width), v.height_jitter)
        speed = None if v.collapse == "instant" else v.collapse_speed
        for foot, fs in feet.items():
            fs.platform = VirtualPlatform.for_vegetation(foot, v.class_height, speed)

    stand = morph.stand_height(gait.step_length)
    c = sc.character
    root_y = 0.5 * (feet[Foot.LEFT].plant.y + feet[Foot.RIGHT].plant.y) + stand
    body = BodyState(Vec3(x0, root_y, lane), c.initial_tilt, c.initial_angular_velocity,
                     Vec3(gait.speed, 0.0, 0.0), c.mass, c.inertia, c.com_height_offset,
                     forward)
    ctl = sc.controller
    return World(sc, hf, build_material(sc), morph,
                 ControllerParams(ctl.alpha, ctl.beta, ctl.angular_drag), gait, body, feet,
                 vegetation, DeformParams(sc.vegetation.t_max, sc.vegetation.gamma), layers,
                 stand, x0, forward=forward)


def _over_vegetation(world: World, x: float, z: float) -> bool:
    if world.vegetation is None:
        return False
    v = world.scenario.vegetation
    return v.x_start <= x <= v.x_end and abs(z - world.scenario.run.lane_z) <= v.strip_half_width


def _flip_stance(world: World) -> None:
    """The swing foot lands where it was headed; the other foot starts swinging."""
    gait, hf = world.gait, world.hf
    lander = world.feet[gait.stance]
    lifter = world.feet[gait.stance.other]
    lander.plant = Vec3(lander.landing.x, sample_height(hf, lander.landing.x, lander.landing.z),
                        lander.landing.z)
    lifter.swing_start = lifter.plant
    x = lander.plant.x + world.forward.x * gait.step_length
    z = lifter.plant.z + world.forward.z * gait.step_length
    x_min, x_max, z_min, z_max = hf.extent
    reach = world.morph.foot_half_length
    if not (x_min + reach <= x <= x_max - reach and z_min <= z <= z_max):
        raise EdgeReached(f"next landing ({x:.3f}, {z:.3f}) is off the terrain")
    lifter.landing = Vec3(x, sample_height(hf, x, z), z)


def step(world: World) -> FrameTrace:
    """Advance the world by one fixed frame and return its trace record."""
    dt, hf, sc = world.dt, world.hf, world.scenario
    body, morph = world.body, world.morph

    # 1. gait clock
    crossed = half_cycles_crossed(world.gait, dt)
    gait = advance_gait(world.gait, dt)
    for _ in range(crossed):
        world.gait = replace(world.gait, stance=world.gait.stance.other)
        _flip_stance(world)
    world.gait = gait
    swing_foot = gait.stance.other
    progress = gait.swing_progress

    # 2. virtual platforms
    for foot, fs in world.feet.items():
        if fs.platform is None:
            continue
        swinging = foot is swing_foot
        info = SwingInfo(swinging, progress,
                         swinging and _over_vegetation(world, fs.landing.x, fs.landing.z))
        fs.platform = update_platform(fs.platform, info, foot in world.pending_touchdowns, dt)
    world.pending_touchdowns = set()

    # 3. foot targets
    for foot, fs in world.feet.items():
        if foot is swing_foot:
            fs.target = swing_target(progress, fs.swing_start, fs.landing, hf,
                                     gait.swing_apex, fs.platform_height)
        else:
            fs.target = stance_target(fs.plant, hf, fs.platform_height)

    # 4. leg IK from the current pelvis
    frame = frame_from_velocity(body.com, body.linear_velocity, world.forward)
    world.forward = frame.forward
    right = frame.normal
    for fs in world.feet.values():
        hip = body.root + right * fs.lateral
        pose = solve_two_bone_ik(hip, fs.target, morph, frame)
        _, fs.position = forward_kinematics(hip, pose, morph, frame)
        fs.clamped = pose.clamped

    # 5. contact events
    samples = {}
    for foot, fs in world.feet.items():
        ground = sample_height(hf, fs.position.x, fs.position.z)
        ph = fs.platform_height
        if ph is None:
            samples[foot] = FootSample(fs.position.y, ground, Surface.GROUND)
        else:
            samples[foot] = FootSample(fs.position.y, ground + ph, Surface.PLATFORM)
    prev = {foot: fs.sample for foot, fs in world.feet.items()}
    for ev in foot_contact_events(prev, samples):
        fs = world.feet[ev.foot]
        if ev.kind is EventKind.TOUCH_DOWN:
            if ev.surface is Surface.PLATFORM:
                world.pending_touchdowns.add(ev.foot)
            else:
                fs.sole_height = samples[ev.foot].support_height
    for foot, fs in world.feet.items():
        fs.sample = samples[foot]

    # 6. footprints
    carved = deposited = 0.0
    if world.layers.terrain_deformation:
        yaw = math.atan2(frame.forward.z, frame.forward.x)
        for fs in world.feet.values():
            if fs.contact and fs.sample.surface is Surface.GROUND and fs.sole_height is not None:
                stamp = FootprintStamp(fs.position, morph.foot_half_length,
                                       morph.foot_half_width, yaw, fs.sole_height)
                report = stamp_footprint(hf, stamp, world.material,
                                         sc.material.max_print_depth)
                carved += report.carved
                deposited += report.deposited

    # 7. vegetation
    if world.vegetation is not None:
        deform_blades(world.vegetation, [fs.position for fs in world.feet.values()],
                      world.deform)

    # 8. balance torque
    ground_points = tuple(
        Vec3(fs.position.x, sample_height(hf, fs.position.x, fs.position.z), fs.position.z)
        for fs in (world.feet[Foot.LEFT], world.feet[Foot.RIGHT]))
    support = compute_support(ground_points, frame, hf)
    class_height = sc.vegetation.class_height if _over_vegetation(
        world, body.root.x, body.root.z) else 0.0
    beta = beta_for_vegetation(class_height, world.params.beta, sc.vegetation.min_beta)
    params = replace(world.params, beta=beta)
    torque = compute_torque(body, support, params, frame)
    torque_total = torque + gravity_torque(body, morph.foot_half_length)

    # 9. rigid body, root tracking the gait, IK offset
    t_next = world.time + dt
    x_ref = world.x_start + gait.speed * t_next
    y_ref = 0.5 * (ground_points[0].y + ground_points[1].y) + world.stand_height
    accel = Vec3(
        ROOT_STIFFNESS * (x_ref - body.root.x) + ROOT_DAMPING * (gait.speed - body.linear_velocity.x),
        ROOT_STIFFNESS * (y_ref - body.root.y) - ROOT_DAMPING * body.linear_velocity.y,
        ROOT_STIFFNESS * (sc.run.lane_z - body.root.z) - ROOT_DAMPING * body.linear_velocity.z,
    ) - GRAVITY
    try:
        body = integrate_body(body, torque_total, accel, dt)
    except FallOver as exc:
        raise FallOver(exc.tilt, world.frame) from None
    left, rightf = world.feet[Foot.LEFT], world.feet[Foot.RIGHT]
    offset = ik_offset_correction((left.position, rightf.position), (left.target, rightf.target))
    world.body = replace(body, root=body.root + offset, heading=frame.forward)

    # 10. trace
    record = FrameTrace(
        world.frame, t_next, world.body.com, world.body.tilt, world.body.angular_velocity,
        torque, beta, gait.phase, gait.stance,
        tuple(_foot_record(world.feet[f]) for f in (Foot.LEFT, Foot.RIGHT)),
        carved, deposited)
    world.frame += 1
    world.time = t_next
    return record


def _foot_record(fs: FootState) -> tuple:
    pl = fs.platform
    state = "none" if pl is None else pl.state.value
    height = 0.0 if pl is None else pl.height
    return (fs.position, fs.target, fs.contact, state, height)


TRACE_COLUMNS = (
    "frame", "time", "com_x", "com_y", "com_z", "tilt", "tilt_rate", "torque", "beta",
    "phase", "stance",
    *(f"{side}_{name}" for side in ("left", "right") for name in (
        "x", "y", "z", "target_x", "target_y", "target_z", "contact",
        "platform_state", "platform_height")),
    "carved", "deposited",
)
TIMING_COLUMNS = ("step_ms",)


def _f(v: float) -> str:
    return f"{v:.9g}"


def trace_header(deterministic: bool) -> str:
    cols = TRACE_COLUMNS if deterministic else TRACE_COLUMNS + TIMING_COLUMNS
    return ",".join(cols)


def format_trace_row(r: FrameTrace, deterministic: bool) -> str:
    cells = [str(r.frame), _f(r.time), _f(r.com.x), _f(r.com.y), _f(r.com.z), _f(r.tilt),
             _f(r.angular_velocity), _f(r.torque), _f(r.beta), _f(r.phase), r.stance.value]
    for pos, target, contact, state, height in r.feet:
        cells += [_f(pos.x), _f(pos.y), _f(pos.z), _f(target.x), _f(target.y), _f(target.z),
                  "1" if contact else "0", state, _f(height)]
    cells += [_f(r.carved), _f(r.deposited)]
    if not deterministic:
        cells.append(f"{r.step_ms:.4f}")
    return ",".join(cells)


def write_trace(rows: list[FrameTrace], path: str | Path, dt: float,
                deterministic: bool) -> None:
    lines = [f"# dt={dt!r}", trace_header(deterministic)]
    lines += [format_trace_row(r, deterministic) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def trace_mode_deterministic() -> bool:
    return os.environ.get(TRACE_MODE_ENV, "timed").strip().lower() in (
        "deterministic", "1", "true", "yes")


@dataclass
class RunResult:
    world: World
    trace: list[FrameTrace]
    termination: str  # completed | edge_reached | fall_over
    metrics: dict
    initial_volume: float
    message: str = ""
    fall_frame: int | None = None

    @property
    def fell(self) -> bool:
        return self.termination == "fall_over"


def percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    return float(np.percentile(np.asarray(values), q))


def run(scenario: Scenario, out_dir: str | Path | None = None,
        deterministic: bool | None = None, layers: Layers = Layers(),
        export_obj: bool = False, frames: int | None = None) -> RunResult:
    """Simulate ``scenario`` and optionally write its artifacts to ``out_dir``.

    ``frames`` caps the number of steps (defaults to duration / dt).
    """
    if deterministic is None:
        deterministic = trace_mode_deterministic()
    world = init_world(scenario, layers)
    initial = world.hf.copy()
    initial_volume = total_volume(initial)
    out = Path(out_dir) if out_dir is not None else None
    blade_every = scenario.run.blade_table_every
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "scenario.ini").write_text(dump_scenario(scenario))
        export.write_pgm(initial, out / "terrain_initial.pgm")
        if world.vegetation is not None:
            export.write_blade_table(world.vegetation.rows(), out / "blades_initial.txt")

    n_frames = scenario.frames if frames is None else frames
    termination, message, fall_frame = "completed", "", None
    trace = world.trace
    for _ in range(n_frames):
        t0 = time.perf_counter()
        try:
            record = step(world)
        except EdgeReached as exc:
            termination, message = "edge_reached", str(exc)
            break
        except FallOver as exc:
            termination, message, fall_frame = "fall_over", str(exc), exc.frame
            break
        record = replace(record, step_ms=(time.perf_counter() - t0) * 1e3)
        trace.append(record)
        if out is not None and blade_every and world.vegetation is not None \
                and world.frame % blade_every == 0:
            export.write_blade_table(world.vegetation.rows(),
                                     out / f"blades_{world.frame:05d}.txt")

    step_ms = [r.step_ms for r in trace]
    metrics = {
        "termination": termination,
        "frames": len(trace),
        "dt": scenario.run.dt,
        "simulated_time": world.time,
        "fall_over": termination == "fall_over",
        "fall_over_frame": -1 if fall_frame is None else fall_frame,
        "median_step_ms": statistics.median(step_ms) if step_ms else 0.0,
        "p99_step_ms": percentile(step_ms, 99),
        "total_carved": math.fsum(r.carved for r in trace),
        "total_deposited": math.fsum(r.deposited for r in trace),
        "initial_volume": initial_volume,
        "final_volume": total_volume(world.hf),
        "max_abs_tilt": max((abs(r.tilt) for r in trace), default=0.0),
    }
    if out is not None:
        write_trace(trace, out / "trace.csv", scenario.run.dt, deterministic)
        export.write_pgm(world.hf, out / "terrain_final.pgm")
        if export_obj:
            export.write_obj(initial, out / "terrain_initial.obj")
            export.write_obj(world.hf, out / "terrain_final.obj")
        if world.vegetation is not None:
            export.write_blade_table(world.vegetation.rows(), out / "blades_final.txt")
        write_metrics(metrics, out / "metrics.txt", deterministic)
    return RunResult(world, trace, termination, metrics, initial_volume, message, fall_frame)


TIMING_METRICS = ("median_step_ms", "p99_step_ms")


def format_metrics(metrics: dict, deterministic: bool = False) -> str:
    lines = []
    for key, value in metrics.items():
        if deterministic and key in TIMING_METRICS:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def write_metrics(metrics: dict, path: str | Path, deterministic: bool = False) -> None:
    Path(path).write_text(format_metrics(metrics, deterministic))


def read_metrics(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition(":")
        out[key.strip()] = value.strip()
    return out

"""High-level tilt controller for the character proxy.

The proxy is a rigid body whose translational state lives at the pelvis and
which leans by ``tilt`` about the pelvis inside the sagittal plane. Its center
of mass sits ``com_height_offset`` above the pelvis along the leaning body axis,
so leaning shifts the vertical projection of the COM and closes the loop of the
PD law

    torque = alpha * (target - com_projection) . u + beta * tilt_rate

where ``target`` is the midpoint of the two feet's ground points and ``u`` the
unit ground tangent between them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import (GRAVITY, GRAVITY_ACCEL, UP, SagittalFrame, Segment2, Vec3,
                       project_to_sagittal)
from .heightfield import HeightField, OutOfTerrain, sample_height

IK_OFFSET_CAP = 0.02


class FallOver(RuntimeError):
    def __init__(self, tilt: float, frame: int | None = None):
        self.tilt = tilt
        self.frame = frame
        where = "" if frame is None else f" at frame {frame}"
        super().__init__(f"character fell over{where}: tilt {tilt:.4f} rad")


@dataclass(frozen=True)
class BodyState:
    root: Vec3
    tilt: float = 0.0
    angular_velocity: float = 0.0
    linear_velocity: Vec3 = field(default_factory=Vec3)
    mass: float = 70.0
    inertia: float = 4.0
    com_height_offset: float = 0.3
    heading: Vec3 = Vec3(1.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.mass > 0 and self.inertia > 0):
            raise ValueError("mass and inertia must be positive")

    @property
    def com(self) -> Vec3:
        """World position of the center of mass."""
        axis = self.heading * math.sin(self.tilt) + UP * math.cos(self.tilt)
        return self.root + axis * self.com_height_offset


@dataclass(frozen=True)
class ControllerParams:
    alpha: float = 30.0
    beta: float = 6.0
    angular_drag: float = 10.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.angular_drag < 0:
            raise ValueError("angular_drag must be non-negative")


@dataclass(frozen=True)
class SupportState:
    segment: Segment2
    target: tuple[float, float]
    slope_dir: tuple[float, float]


def _unit2(s: float, h: float) -> tuple[float, float]:
    n = math.hypot(s, h)
    return (s / n, h / n)


def compute_support(feet_ground_points: tuple[Vec3, Vec3], frame: SagittalFrame,
                    hf: HeightField) -> SupportState:
    for p in feet_ground_points:
        if not hf.contains(p.x, p.z):
            raise OutOfTerrain(f"foot at ({p.x:.4f}, {p.z:.4f}) is off the terrain")
    pa = project_to_sagittal(feet_ground_points[0], frame)
    pb = project_to_sagittal(feet_ground_points[1], frame)
    segment = Segment2.ordered(pa, pb)
    ds = segment.b[0] - segment.a[0]
    if ds > 1e-9:
        u = _unit2(ds, segment.b[1] - segment.a[1])
    else:
        # coincident feet: local terrain tangent along forward
        p = feet_ground_points[0]
        step = hf.cell_size
        f = frame.forward
        x_min, x_max, z_min, z_max = hf.extent
        ahead = Vec3(min(max(p.x + f.x * step, x_min), x_max), 0.0,
                     min(max(p.z + f.z * step, z_min), z_max))
        behind = Vec3(min(max(p.x - f.x * step, x_min), x_max), 0.0,
                      min(max(p.z - f.z * step, z_min), z_max))
        run = (ahead - behind).dot(f)
        rise = sample_height(hf, ahead.x, ahead.z) - sample_height(hf, behind.x, behind.z)
        u = _unit2(run, rise) if run > 0 else (1.0, 0.0)
    return SupportState(segment, segment.midpoint, u)


def com_ground_projection(body: BodyState, support: SupportState,
                          frame: SagittalFrame) -> tuple[float, float]:
    """Where the vertical through the COM meets the local ground line."""
    s_com, _ = project_to_sagittal(body.com, frame)
    (ts, th), (us, uh) = support.target, support.slope_dir
    return (s_com, th + (s_com - ts) * uh / us)


def compute_torque(body: BodyState, support: SupportState, params: ControllerParams,
                   frame: SagittalFrame) -> float:
    ps, ph = com_ground_projection(body, support, frame)
    (ts, th), (us, uh) = support.target, support.slope_dir
    error = (ts - ps) * us + (th - ph) * uh
    return (params.alpha * error + params.beta * body.angular_velocity
            - params.angular_drag * body.angular_velocity)


def gravity_torque(body: BodyState, foot_half_length: float) -> float:
    """Toppling torque once the COM leans past what the feet can hold.

    The supported body resists gravity while the COM stays within a foot
    half-length of the pelvis; beyond that the overhang tips it further.
    """
    lever = body.com_height_offset * math.sin(body.tilt)
    excess = abs(lever) - foot_half_length
    if excess <= 0.0:
        return 0.0
    return math.copysign(body.mass * GRAVITY_ACCEL * excess, lever)


def integrate_body(body: BodyState, torque: float, external_accel: Vec3,
                   dt: float) -> BodyState:
    """One semi-implicit Euler step of the tilt and translational state."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    omega = body.angular_velocity + torque / body.inertia * dt
    tilt = body.tilt + omega * dt
    velocity = body.linear_velocity + (GRAVITY + external_accel) * dt
    root = body.root + velocity * dt
    if abs(tilt) >= math.pi / 2:
        raise FallOver(tilt)
    return replace(body, root=root, tilt=tilt, angular_velocity=omega,
                   linear_velocity=velocity)


def ik_offset_correction(foot_positions: tuple[Vec3, Vec3], ik_targets: tuple[Vec3, Vec3],
                         cap: float = IK_OFFSET_CAP) -> Vec3:
    """Body translation that best closes the foot-to-target gaps.

    The least-squares rigid translation for two gaps is their mean; it is
    limited to ``cap`` meters per call.
    """
    gap = ((ik_targets[0] - foot_positions[0]) + (ik_targets[1] - foot_positions[1])) * 0.5
    n = gap.norm()
    if n > cap:
        gap = gap * (cap / n)
    return gap

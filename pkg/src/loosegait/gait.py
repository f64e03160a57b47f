"""Procedural gait clock, foot targets and analytic two-bone leg IK."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .geometry import SagittalFrame, Vec3, embed_from_sagittal, out_of_plane, project_to_sagittal
from .heightfield import HeightField, OutOfTerrain, sample_height

REFERENCE_HEIGHT = 1.7
CONTACT_TOLERANCE = 1e-4


@dataclass(frozen=True)
class Morphology:
    leg_upper: float = 0.45
    leg_lower: float = 0.45
    hip_spacing: float = 0.2
    pelvis_height: float = 0.95
    total_height: float = 1.7
    foot_half_length: float = 0.13
    foot_half_width: float = 0.05

    def __post_init__(self):
        lengths = (self.leg_upper, self.leg_lower, self.hip_spacing, self.pelvis_height,
                   self.total_height, self.foot_half_length, self.foot_half_width)
        if min(lengths) <= 0:
            raise ValueError("morphology lengths must be positive")
        if self.leg_upper + self.leg_lower >= self.pelvis_height + 0.2:
            raise ValueError("legs too long for the pelvis height")

    @classmethod
    def for_height(cls, total_height: float) -> Morphology:
        k = total_height / REFERENCE_HEIGHT
        return cls(0.45 * k, 0.45 * k, 0.2 * k, 0.95 * k, total_height, 0.13 * k, 0.05 * k)

    @property
    def leg_length(self) -> float:
        return self.leg_upper + self.leg_lower

    def stand_height(self, step_length: float) -> float:
        """Pelvis height above the ground that keeps both feet reachable in
        double support with the feet half a step either side of the pelvis."""
        reach = 0.97 * self.leg_length
        half = 0.5 * step_length
        if half >= reach:
            raise ValueError("step length too long for the legs")
        return min(self.pelvis_height, math.sqrt(reach * reach - half * half))


class Foot(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> Foot:
        return Foot.RIGHT if self is Foot.LEFT else Foot.LEFT


@dataclass(frozen=True)
class GaitState:
    phase: float = 0.0
    stance: Foot = Foot.LEFT
    step_length: float = 0.5
    cycle_duration: float = 1.2
    swing_apex: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.phase < 1.0:
            raise ValueError("phase must lie in [0, 1)")
        if not (self.step_length > 0 and self.cycle_duration > 0):
            raise ValueError("step_length and cycle_duration must be positive")

    @classmethod
    def for_height(cls, total_height: float) -> GaitState:
        k = total_height / REFERENCE_HEIGHT
        return cls(step_length=0.5 * k, cycle_duration=1.2 * k, swing_apex=0.05 * k)

    @property
    def swing_progress(self) -> float:
        """Fraction of the current half-cycle swing, in [0, 1)."""
        return 2.0 * self.phase - (1.0 if self.phase >= 0.5 else 0.0)

    @property
    def speed(self) -> float:
        return 2.0 * self.step_length / self.cycle_duration


def advance_gait(g: GaitState, dt: float) -> GaitState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    raw = g.phase + dt / g.cycle_duration
    flips = math.floor(2.0 * raw) - math.floor(2.0 * g.phase)
    phase = raw % 1.0
    if phase >= 1.0:  # float modulo can round up to exactly 1.0
        phase = 0.0
    stance = g.stance.other if flips % 2 else g.stance
    return replace(g, phase=phase, stance=stance)


def half_cycles_crossed(g: GaitState, dt: float) -> int:
    raw = g.phase + dt / g.cycle_duration
    return math.floor(2.0 * raw) - math.floor(2.0 * g.phase)


def clearance_bump(progress: float, apex: float) -> float:
    return apex * math.sin(math.pi * progress)


def swing_target(progress: float, start: Vec3, landing: Vec3, hf: HeightField,
                 apex: float, platform_height: float | None = None) -> Vec3:
    """IK target for the swing foot ``progress`` of the way through its swing.

    The horizontal path eases from ``start`` to ``landing``; the height is the
    perceived ground (the virtual platform top when one is active, else the
    ray-cast terrain) plus the clearance bump.
    """
    w = 0.5 * (1.0 - math.cos(math.pi * progress))
    x = start.x + (landing.x - start.x) * w
    z = start.z + (landing.z - start.z) * w
    if not hf.contains(landing.x, landing.z):
        raise OutOfTerrain(f"landing point ({landing.x:.4f}, {landing.z:.4f}) is off the terrain")
    ground = sample_height(hf, x, z)
    base = ground + (platform_height or 0.0)
    return Vec3(x, base + clearance_bump(progress, apex), z)


def stance_target(plant: Vec3, hf: HeightField, platform_height: float | None = None) -> Vec3:
    return Vec3(plant.x, sample_height(hf, plant.x, plant.z) + (platform_height or 0.0), plant.z)


@dataclass(frozen=True)
class LegPose:
    hip_angle: float   # thigh angle from straight down, positive toward forward
    knee_angle: float  # interior thigh-shin angle, pi is a straight leg
    ankle_angle: float  # keeps the sole level
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.knee_angle <= math.pi:
            raise ValueError("knee angle out of range")


def solve_two_bone_ik(hip: Vec3, target: Vec3, m: Morphology,
                      frame: SagittalFrame) -> LegPose:
    """Law-of-cosines leg pose in the sagittal plane, knee bending forward.

    Unreachable targets are pulled onto the nearest reachable distance and the
    returned pose is flagged ``clamped``.
    """
    a, b = m.leg_upper, m.leg_lower
    hs, hh = project_to_sagittal(hip, frame)
    ts, th = project_to_sagittal(target, frame)
    ds, dh = ts - hs, th - hh
    d = math.hypot(ds, dh)
    lo, hi = abs(a - b), a + b
    clamped = False
    if d == 0.0:
        ds, dh, d = 0.0, -lo, lo
        clamped = lo > 0.0
    elif d > hi or d < lo:
        k = (hi if d > hi else lo) / d
        ds, dh, d = ds * k, dh * k, d * k
        clamped = True
    cos_knee = (a * a + b * b - d * d) / (2 * a * b)
    knee = math.acos(min(1.0, max(-1.0, cos_knee)))
    if d > 0.0:
        cos_hip = (a * a + d * d - b * b) / (2 * a * d)
        spread = math.acos(min(1.0, max(-1.0, cos_hip)))
    else:
        spread = 0.0
    hip_angle = math.atan2(ds, -dh) + spread
    shin = hip_angle - (math.pi - knee)
    return LegPose(hip_angle, knee, -shin, clamped)


def forward_kinematics(hip: Vec3, pose: LegPose, m: Morphology,
                       frame: SagittalFrame) -> tuple[Vec3, Vec3]:
    """(knee, foot) world positions for ``pose`` hanging from ``hip``."""
    hs, hh = project_to_sagittal(hip, frame)
    lateral = out_of_plane(hip, frame)
    t = pose.hip_angle
    shin = t - (math.pi - pose.knee_angle)
    ks, kh = hs + m.leg_upper * math.sin(t), hh - m.leg_upper * math.cos(t)
    fs, fh = ks + m.leg_lower * math.sin(shin), kh - m.leg_lower * math.cos(shin)
    knee = embed_from_sagittal((ks, kh), frame) + lateral
    foot = embed_from_sagittal((fs, fh), frame) + lateral
    return knee, foot


class Surface(str, Enum):
    GROUND = "ground"
    PLATFORM = "platform"


@dataclass(frozen=True)
class FootSample:
    height: float
    support_height: float
    surface: Surface = Surface.GROUND

    @property
    def in_contact(self) -> bool:
        return self.height <= self.support_height + CONTACT_TOLERANCE


class EventKind(str, Enum):
    TOUCH_DOWN = "touch_down"
    LIFT_OFF = "lift_off"


@dataclass(frozen=True)
class ContactEvent:
    foot: Foot
    kind: EventKind
    surface: Surface | None = None


def foot_contact_events(prev: dict[Foot, FootSample],
                        nxt: dict[Foot, FootSample]) -> list[ContactEvent]:
    """Touch-down / lift-off transitions between two frames, left foot first.

    A foot that stays in contact while its support switches from a platform to
    the ground produces a fresh touch-down on the ground.
    """
    events = []
    for foot in (Foot.LEFT, Foot.RIGHT):
        p, n = prev[foot], nxt[foot]
        if n.in_contact and (not p.in_contact or p.surface != n.surface):
            events.append(ContactEvent(foot, EventKind.TOUCH_DOWN, n.surface))
        elif p.in_contact and not n.in_contact:
            events.append(ContactEvent(foot, EventKind.LIFT_OFF))
    return events

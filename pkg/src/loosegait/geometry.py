"""Small vector types and the sagittal-plane projection shared by every layer.

Conventions: right-handed, y up, meters and seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

GRAVITY_ACCEL = 9.81


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: Vec3) -> Vec3:
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vec3) -> Vec3:
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, k: float) -> Vec3:
        return Vec3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def __neg__(self) -> Vec3:
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: Vec3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> Vec3:
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize a zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def horizontal(self) -> Vec3:
        return Vec3(self.x, 0.0, self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


GRAVITY = Vec3(0.0, -GRAVITY_ACCEL, 0.0)
UP = Vec3(0.0, 1.0, 0.0)


@dataclass(frozen=True, slots=True)
class SagittalFrame:
    """Vertical plane through ``origin`` spanned by ``forward`` and ``up``."""

    origin: Vec3
    forward: Vec3
    up: Vec3 = UP

    def __post_init__(self):
        if abs(self.forward.norm() - 1.0) > 1e-9 or abs(self.up.norm() - 1.0) > 1e-9:
            raise ValueError("frame axes must be unit length")
        if abs(self.forward.dot(self.up)) > 1e-9:
            raise ValueError("forward must be orthogonal to up")

    @property
    def normal(self) -> Vec3:
        # forward x up
        f, u = self.forward, self.up
        return Vec3(f.y * u.z - f.z * u.y, f.z * u.x - f.x * u.z, f.x * u.y - f.y * u.x)


@dataclass(frozen=True, slots=True)
class Segment2:
    """Segment in sagittal coordinates, endpoints ordered along the ground axis."""

    a: tuple[float, float]
    b: tuple[float, float]

    @classmethod
    def ordered(cls, p: tuple[float, float], q: tuple[float, float]) -> Segment2:
        return cls(p, q) if p[0] <= q[0] else cls(q, p)

    @property
    def midpoint(self) -> tuple[float, float]:
        return (0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1]))


def project_to_sagittal(p: Vec3, frame: SagittalFrame) -> tuple[float, float]:
    d = p - frame.origin
    return (d.dot(frame.forward), d.dot(frame.up))


def embed_from_sagittal(q: tuple[float, float], frame: SagittalFrame) -> Vec3:
    return frame.origin + frame.forward * q[0] + frame.up * q[1]


def out_of_plane(p: Vec3, frame: SagittalFrame) -> Vec3:
    """Component of ``p - origin`` orthogonal to the sagittal plane."""
    n = frame.normal
    return n * (p - frame.origin).dot(n)


def down_vector(v: Vec3) -> Vec3:
    return Vec3(v.x, -abs(v.y), v.z)


def frame_from_velocity(origin: Vec3, velocity: Vec3, previous_forward: Vec3,
                        min_speed: float = 1e-6) -> SagittalFrame:
    """Sagittal frame at ``origin`` facing the horizontal velocity.

    Below ``min_speed`` the plane is undefined and the previous heading is kept.
    """
    h = velocity.horizontal()
    forward = h.normalized() if h.norm() >= min_speed else previous_forward
    return SagittalFrame(origin, forward, UP)

"""Soft above-ground layer: blade displacement field and virtual platforms."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .gait import Foot
from .geometry import Vec3, down_vector
from .heightfield import HeightField

SMALL_GRASS = 0.5
MEDIUM_GRASS = 0.9


@dataclass(frozen=True)
class DeformParams:
    t_max: float = 0.3
    gamma: float = 1.5

    def __post_init__(self):
        if not (self.t_max > 0 and self.gamma > 0):
            raise ValueError("t_max and gamma must be positive")

    @property
    def radius(self) -> float:
        return self.t_max / self.gamma


def displacement(p: Vec3, p_f: Vec3, params: DeformParams) -> Vec3:
    """Translation of point ``p`` pushed by a foot at ``p_f``.

    Magnitude falls off linearly with distance and is clamped to
    ``[0, t_max]``; the direction is the radial direction with its vertical
    part forced downward. At the foot itself the push is straight down.
    """
    d = p - p_f
    r = d.norm()
    if r == 0.0:
        return Vec3(0.0, -params.t_max, 0.0)
    if r >= params.radius:
        return Vec3()
    mag = min(max(params.t_max - params.gamma * r, 0.0), params.t_max)
    return down_vector(d) * (mag / r)


def displacement_field(points: np.ndarray, p_f: Vec3, params: DeformParams) -> np.ndarray:
    """Vectorised :func:`displacement` over an ``(n, 3)`` array of points."""
    d = points - np.array(p_f.as_tuple())
    r = np.sqrt((d * d).sum(axis=1))
    mag = np.clip(params.t_max - params.gamma * r, 0.0, params.t_max)
    mag[r >= params.radius] = 0.0
    out = np.zeros_like(d)
    hit = (mag > 0.0) & (r > 0.0)
    if hit.any():
        dh = d[hit]
        dh[:, 1] = -np.abs(dh[:, 1])
        out[hit] = dh * (mag[hit] / r[hit])[:, None]
    out[r == 0.0] = (0.0, -params.t_max, 0.0)
    return out


@dataclass
class VegetationLayer:
    bases: np.ndarray        # (n, 3)
    heights: np.ndarray      # (n,)
    class_height: float
    tip_offsets: np.ndarray | None = None

    def __post_init__(self):
        self.bases = np.asarray(self.bases, dtype=np.float64).reshape(-1, 3)
        self.heights = np.asarray(self.heights, dtype=np.float64).reshape(-1)
        if len(self.bases) != len(self.heights):
            raise ValueError("one height per blade base")
        if np.any(self.heights <= 0):
            raise ValueError("blade heights must be positive")
        if self.tip_offsets is None:
            self.tip_offsets = np.zeros_like(self.bases)

    def __len__(self) -> int:
        return len(self.heights)

    @property
    def rest_tips(self) -> np.ndarray:
        tips = self.bases.copy()
        tips[:, 1] += self.heights
        return tips

    @property
    def tips(self) -> np.ndarray:
        return self.rest_tips + self.tip_offsets

    def rows(self):
        for i, (base, tip) in enumerate(zip(self.bases, self.tips)):
            yield i, Vec3(*base), Vec3(*tip)


def generate_vegetation(hf: HeightField, class_height: float, density: float, seed: int,
                        x_range: tuple[float, float], z_range: tuple[float, float],
                        height_jitter: float = 0.2) -> VegetationLayer:
    """Uniformly scattered blades rooted on the terrain inside the given box."""
    rng = np.random.default_rng(seed)
    x_min, x_max, z_min, z_max = hf.extent
    x0, x1 = max(x_range[0], x_min), min(x_range[1], x_max)
    z0, z1 = max(z_range[0], z_min), min(z_range[1], z_max)
    area = max(x1 - x0, 0.0) * max(z1 - z0, 0.0)
    n = int(round(density * area))
    xs = rng.uniform(x0, x1, n)
    zs = rng.uniform(z0, z1, n)
    heights = class_height * rng.uniform(1.0 - height_jitter, 1.0, n)
    # bilinear lookup, vectorised
    fx = np.clip((xs - hf.origin.x) / hf.cell_size - 0.5, 0.0, hf.nx - 1.0)
    fz = np.clip((zs - hf.origin.z) / hf.cell_size - 0.5, 0.0, hf.nz - 1.0)
    i = np.minimum(fx.astype(int), hf.nx - 2)
    j = np.minimum(fz.astype(int), hf.nz - 2)
    tx, tz = fx - i, fz - j
    h = hf.heights
    ys = ((1 - tx) * ((1 - tz) * h[i, j] + tz * h[i, j + 1])
          + tx * ((1 - tz) * h[i + 1, j] + tz * h[i + 1, j + 1]))
    return VegetationLayer(np.stack([xs, ys, zs], axis=1), heights, class_height)


def deform_blades(layer: VegetationLayer, feet: list[Vec3], params: DeformParams) -> None:
    """Recompute every tip offset from rest; elastic, nothing persists."""
    rest = layer.rest_tips
    offsets = np.zeros_like(rest)
    for p_f in feet:
        offsets += displacement_field(rest, p_f, params)
    norms = np.sqrt((offsets * offsets).sum(axis=1))
    over = norms > layer.heights
    if over.any():
        offsets[over] *= (layer.heights[over] / norms[over])[:, None]
    layer.tip_offsets = offsets


class PlatformState(str, Enum):
    INACTIVE = "inactive"
    RISING = "rising"
    HOLD = "hold"
    COLLAPSING = "collapsing"


@dataclass(frozen=True)
class VirtualPlatform:
    """Fake ground under one foot standing in for the perceived grass top."""

    foot: Foot
    h_max: float
    collapse_speed: float | None = 2.0  # m/s, None collapses instantly
    state: PlatformState = PlatformState.INACTIVE
    height: float = 0.0  # above the true ground

    def __post_init__(self):
        if not 0.0 <= self.height <= self.h_max:
            raise ValueError("platform height outside [0, h_max]")

    @classmethod
    def for_vegetation(cls, foot: Foot, class_height: float,
                       collapse_speed: float | None = 2.0) -> VirtualPlatform:
        return cls(foot, class_height / 3.0, collapse_speed)

    @property
    def active(self) -> bool:
        return self.state is not PlatformState.INACTIVE


@dataclass(frozen=True)
class SwingInfo:
    swinging: bool
    progress: float = 0.0
    over_vegetation: bool = False


def update_platform(pl: VirtualPlatform, swing: SwingInfo, touched_down: bool,
                    dt: float) -> VirtualPlatform:
    """Advance the platform state machine by one frame.

    Rising while the foot goes up (first half of the swing), holding at
    ``h_max`` while it comes down, collapsing once the foot lands on it.
    """
    state, height = pl.state, pl.height
    # only a descending foot (platform holding) can land on it
    if touched_down and state is PlatformState.HOLD:
        state = PlatformState.COLLAPSING
    if state is PlatformState.COLLAPSING:
        if pl.collapse_speed is None:
            height = 0.0
        else:
            height = max(height - pl.collapse_speed * dt, 0.0)
        if height == 0.0:
            state = PlatformState.INACTIVE
    elif swing.swinging and swing.over_vegetation:
        if swing.progress < 0.5:
            state, height = PlatformState.RISING, pl.h_max * swing.progress / 0.5
        else:
            state, height = PlatformState.HOLD, pl.h_max
    return replace(pl, state=state, height=height)


def beta_for_vegetation(class_height: float, base_beta: float = 6.0,
                        min_beta: float = 4.0) -> float:
    """Swing gain lowered linearly from bare ground to medium (0.9 m) grass."""
    if class_height < 0:
        raise ValueError("class_height must be non-negative")
    return base_beta + (min_beta - base_beta) * min(class_height / MEDIUM_GRASS, 1.0)


"""Deformable height-field terrain and procedural footprint stamping.

Heights are stored per cell, ``heights[i, j]`` for the cell whose center sits at
``(origin.x + (i + 0.5) * cell_size, origin.z + (j + 0.5) * cell_size)``.
Each cell stands for ``cell_size**2`` of ground, so the terrain volume is the
plain sum of heights times the cell area.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Vec3

HEIGHT_LIMIT = 100.0
MAX_PRINT_DEPTH = 0.08
RIM_WIDTH = 1


class OutOfTerrain(ValueError):
    pass


class RayBelowSurface(ValueError):
    pass


@dataclass
class HeightField:
    heights: np.ndarray
    cell_size: float
    origin: Vec3 = field(default_factory=Vec3)

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.ndim != 2 or min(self.heights.shape) < 2:
            raise ValueError("height grid must be at least 2x2")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")
        if np.abs(self.heights).max() > HEIGHT_LIMIT:
            raise ValueError(f"heights must stay within +-{HEIGHT_LIMIT} m")

    @classmethod
    def flat(cls, nx: int, nz: int, cell_size: float, height: float = 0.0,
             origin: Vec3 | None = None) -> HeightField:
        return cls(np.full((nx, nz), float(height)), cell_size, origin or Vec3())

    @property
    def nx(self) -> int:
        return self.heights.shape[0]

    @property
    def nz(self) -> int:
        return self.heights.shape[1]

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, z_min, z_max) of the covered ground."""
        x0, z0 = self.origin.x, self.origin.z
        return (x0, x0 + self.nx * self.cell_size, z0, z0 + self.nz * self.cell_size)

    def contains(self, x: float, z: float) -> bool:
        x_min, x_max, z_min, z_max = self.extent
        return x_min <= x <= x_max and z_min <= z <= z_max

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin.x + (i + 0.5) * self.cell_size,
                self.origin.z + (j + 0.5) * self.cell_size)

    def copy(self) -> HeightField:
        return HeightField(self.heights.copy(), self.cell_size, self.origin)


@dataclass(frozen=True)
class TerrainMaterial:
    name: str
    depth: float
    compression: float
    smoothness: float

    def __post_init__(self):
        if self.depth < 0 or self.compression < 0:
            raise ValueError("depth and compression must be non-negative")
        if not 0.0 <= self.smoothness <= 1.0:
            raise ValueError("smoothness must lie in [0, 1]")


@dataclass(frozen=True)
class FootprintStamp:
    center: Vec3
    half_length: float
    half_width: float
    yaw: float = 0.0  # foot axis is (cos yaw, 0, sin yaw)
    sole_height: float = 0.0

    def __post_init__(self):
        if not (self.half_length > 0 and self.half_width > 0):
            raise ValueError("footprint half extents must be positive")


@dataclass(frozen=True)
class DeformationReport:
    carved: float = 0.0
    deposited: float = 0.0
    carved_cells: int = 0
    rim_cells: int = 0
    bounds: tuple[int, int, int, int] | None = None  # i0, i1, j0, j1 (exclusive ends)


def sample_height(hf: HeightField, x: float, z: float) -> float:
    if not hf.contains(x, z):
        raise OutOfTerrain(f"({x:.4f}, {z:.4f}) lies outside the terrain")
    fx = (x - hf.origin.x) / hf.cell_size - 0.5
    fz = (z - hf.origin.z) / hf.cell_size - 0.5
    # the half-cell border outside the outermost centers clamps to the edge
    fx = min(max(fx, 0.0), hf.nx - 1.0)
    fz = min(max(fz, 0.0), hf.nz - 1.0)
    i = min(int(fx), hf.nx - 2)
    j = min(int(fz), hf.nz - 2)
    tx, tz = fx - i, fz - j
    h = hf.heights
    return float((1 - tx) * ((1 - tz) * h[i, j] + tz * h[i, j + 1])
                 + tx * ((1 - tz) * h[i + 1, j] + tz * h[i + 1, j + 1]))


def raycast_down(hf: HeightField, x: float, z: float, y_start: float) -> Vec3:
    surface = sample_height(hf, x, z)
    if y_start < surface:
        raise RayBelowSurface(f"ray starts at {y_start:.4f}, below surface {surface:.4f}")
    return Vec3(x, surface, z)


def total_volume(hf: HeightField) -> float:
    return float(hf.heights.sum()) * hf.cell_size ** 2


def _stamp_masks(hf: HeightField, stamp: FootprintStamp, rim: float):
    """Index box plus inside / rim masks over it, or None if the box is empty."""
    c, s = math.cos(stamp.yaw), math.sin(stamp.yaw)
    hl, hw = stamp.half_length + rim, stamp.half_width + rim
    rx = abs(c) * hl + abs(s) * hw
    rz = abs(s) * hl + abs(c) * hw
    cs = hf.cell_size
    i0 = max(int(math.floor((stamp.center.x - rx - hf.origin.x) / cs - 0.5)), 0)
    i1 = min(int(math.ceil((stamp.center.x + rx - hf.origin.x) / cs - 0.5)) + 1, hf.nx)
    j0 = max(int(math.floor((stamp.center.z - rz - hf.origin.z) / cs - 0.5)), 0)
    j1 = min(int(math.ceil((stamp.center.z + rz - hf.origin.z) / cs - 0.5)) + 1, hf.nz)
    if i0 >= i1 or j0 >= j1:
        return None
    xs = hf.origin.x + (np.arange(i0, i1) + 0.5) * cs - stamp.center.x
    zs = hf.origin.z + (np.arange(j0, j1) + 0.5) * cs - stamp.center.z
    dx, dz = np.meshgrid(xs, zs, indexing="ij")
    along = np.abs(dx * c + dz * s)
    across = np.abs(-dx * s + dz * c)
    inside = (along <= stamp.half_length) & (across <= stamp.half_width)
    ring = (along <= hl) & (across <= hw) & ~inside
    return (i0, i1, j0, j1), inside, ring


def stamp_footprint(hf: HeightField, stamp: FootprintStamp, mat: TerrainMaterial,
                    max_print_depth: float = MAX_PRINT_DEPTH,
                    rim_width: int = RIM_WIDTH) -> DeformationReport:
    """Carve one frame of a footprint, pile the rim and smooth the neighbourhood.

    Cells under the sole lose ``mat.depth`` (never going below
    ``sole_height - max_print_depth``), rim cells gain ``mat.compression``, and
    the touched box is blended with its Gaussian-filtered self by
    ``mat.smoothness``. A frame that carves nothing leaves the grid untouched.
    """
    found = _stamp_masks(hf, stamp, rim_width * hf.cell_size)
    if found is None:
        return DeformationReport()
    (i0, i1, j0, j1), inside, ring = found
    region = hf.heights[i0:i1, j0:j1]
    floor = stamp.sole_height - max_print_depth
    carve = np.where(inside & (region > floor),
                     np.minimum(mat.depth, region - floor), 0.0)
    carved_cells = int(np.count_nonzero(carve))
    if carved_cells == 0:
        return DeformationReport()

    area = hf.cell_size ** 2
    before = float(region.sum())
    region -= carve
    carved = (before - float(region.sum())) * area
    rim_cells = int(np.count_nonzero(ring))
    deposited = 0.0
    if mat.compression > 0.0 and rim_cells:
        region[ring] += mat.compression
        deposited = mat.compression * rim_cells * area

    bounds = (max(i0 - 1, 0), min(i1 + 1, hf.nx), max(j0 - 1, 0), min(j1 + 1, hf.nz))
    apply_gaussian_region(hf, bounds, mat.smoothness)
    return DeformationReport(carved, deposited, carved_cells, rim_cells, bounds)


def gaussian_kernel3(sigma: float = 1.0) -> np.ndarray:
    k = np.exp(-(np.arange(-1, 2) ** 2) / (2.0 * sigma * sigma))
    kernel = np.outer(k, k)
    return kernel / kernel.sum()


KERNEL3 = gaussian_kernel3()


def apply_gaussian_region(hf: HeightField, bounds: tuple[int, int, int, int],
                          magnitude: float) -> None:
    """Blend cells in ``bounds`` toward their 3x3 Gaussian average.

    Written as symmetric pairwise exchanges between neighbouring cells of the
    region, so cells with all eight neighbours in the region get exactly
    ``(1 - m) h + m (K * h)`` and the region's height sum is conserved. Neighbours
    past the grid edge are clamped to the cell itself and exchange nothing.
    """
    if magnitude == 0.0:
        return
    i0, i1, j0, j1 = bounds
    if not (0 <= i0 < i1 <= hf.nx and 0 <= j0 < j1 <= hf.nz):
        raise ValueError(f"bounds {bounds} outside the grid")
    region = hf.heights[i0:i1, j0:j1]
    n, m = region.shape
    padded = np.pad(region, 1, mode="edge")
    valid = np.pad(np.ones_like(region, dtype=bool), 1, constant_values=False)
    flux = np.zeros_like(region)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = padded[1 + di:1 + di + n, 1 + dj:1 + dj + m]
            ok = valid[1 + di:1 + di + n, 1 + dj:1 + dj + m]
            flux += KERNEL3[1 + di, 1 + dj] * np.where(ok, nb - region, 0.0)
    region += magnitude * flux


def _value_noise(nx: int, nz: int, cell_size: float, lattice: float,
                 rng: np.random.Generator) -> np.ndarray:
    gx = int(math.ceil(nx * cell_size / lattice)) + 2
    gz = int(math.ceil(nz * cell_size / lattice)) + 2
    values = rng.uniform(-1.0, 1.0, size=(gx, gz))
    fx = (np.arange(nx) + 0.5) * cell_size / lattice
    fz = (np.arange(nz) + 0.5) * cell_size / lattice
    ix, iz = fx.astype(int), fz.astype(int)
    tx, tz = fx - ix, fz - iz
    tx = tx * tx * (3 - 2 * tx)
    tz = tz * tz * (3 - 2 * tz)
    a = values[np.ix_(ix, iz)]
    b = values[np.ix_(ix + 1, iz)]
    c = values[np.ix_(ix, iz + 1)]
    d = values[np.ix_(ix + 1, iz + 1)]
    tx, tz = tx[:, None], tz[None, :]
    return (a * (1 - tx) + b * tx) * (1 - tz) + (c * (1 - tx) + d * tx) * tz


def generate_slope(nx: int, nz: int, cell_size: float, slope_angle: float = 0.0,
                   noise_seed: int = 0, noise_amp: float = 0.0,
                   noise_lattice: float = 1.0, origin: Vec3 | None = None) -> HeightField:
    """Plane rising along +x at ``slope_angle`` plus seeded value noise."""
    origin = origin or Vec3()
    x = origin.x + (np.arange(nx) + 0.5) * cell_size
    heights = np.repeat((math.tan(slope_angle) * x)[:, None], nz, axis=1)
    if noise_amp != 0.0:
        rng = np.random.default_rng(noise_seed)
        heights += noise_amp * _value_noise(nx, nz, cell_size, noise_lattice, rng)
    return HeightField(heights, cell_size, origin)

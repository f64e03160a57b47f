"""Snapshot writers: 16-bit PGM height maps, OBJ meshes and blade tables."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Vec3
from .heightfield import HeightField


def write_pgm(hf: HeightField, path: str | Path) -> tuple[float, float]:
    """Write heights as binary P5 with big-endian 16-bit samples.

    The grid is written with x along the image columns and z along the rows.
    The height range used for the linear mapping goes into ``<path>.txt``.
    Returns ``(min_h, max_h)``.
    """
    path = Path(path)
    h = hf.heights
    lo, hi = float(h.min()), float(h.max())
    span = hi - lo
    if span > 0:
        q = np.rint((h - lo) / span * 65535.0)
    else:
        q = np.zeros_like(h)
    pixels = q.T.astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{hf.nx} {hf.nz}\n65535\n".encode("ascii"))
        f.write(pixels.tobytes())
    sidecar = Path(str(path) + ".txt")
    sidecar.write_text(
        f"min_h: {lo!r}\nmax_h: {hi!r}\nnx: {hf.nx}\nnz: {hf.nz}\n"
        f"cell_size: {hf.cell_size!r}\n"
        f"origin: {hf.origin.x!r} {hf.origin.y!r} {hf.origin.z!r}\n"
    )
    return lo, hi


def read_pgm(path: str | Path) -> HeightField:
    """Inverse of :func:`write_pgm`, up to 16-bit quantisation."""
    path = Path(path)
    meta = {}
    for line in Path(str(path) + ".txt").read_text().splitlines():
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    data = path.read_bytes()
    # header is three whitespace-terminated lines
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    width, height = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    q = np.frombuffer(parts[3], dtype=">u2", count=width * height).reshape(height, width)
    lo, hi = float(meta["min_h"]), float(meta["max_h"])
    heights = lo + q.T.astype(np.float64) / maxval * (hi - lo)
    ox, oy, oz = (float(v) for v in meta["origin"].split())
    return HeightField(heights, float(meta["cell_size"]), Vec3(ox, oy, oz))


def write_obj(hf: HeightField, path: str | Path) -> None:
    """Triangle mesh through the cell centers, faces wound CCW seen from +y."""
    nx, nz = hf.nx, hf.nz
    xs = hf.origin.x + (np.arange(nx) + 0.5) * hf.cell_size
    zs = hf.origin.z + (np.arange(nz) + 0.5) * hf.cell_size
    lines = ["# height-field mesh"]
    for i in range(nx):
        for j in range(nz):
            lines.append(f"v {xs[i]:.9g} {hf.heights[i, j]:.9g} {zs[j]:.9g}")
    for i in range(nx - 1):
        for j in range(nz - 1):
            a = i * nz + j + 1  # OBJ indices are 1-based
            b = a + 1           # (i, j+1)
            c = a + nz          # (i+1, j)
            d = c + 1           # (i+1, j+1)
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {c} {b} {d}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_blade_table(rows, path: str | Path) -> None:
    """``rows`` yields (blade_id, base Vec3, tip Vec3)."""
    out = ["blade_id base_x base_y base_z tip_x tip_y tip_z"]
    for bid, base, tip in rows:
        out.append(f"{bid} {base.x:.9g} {base.y:.9g} {base.z:.9g} "
                   f"{tip.x:.9g} {tip.y:.9g} {tip.z:.9g}")
    Path(path).write_text("\n".join(out) + "\n")

"""Regenerate the committed golden traces under tests/golden/.

    python3 scripts/regen_golden.py

One trace per material preset on flat and 10 degree slopes, derived from the
reference scenario and shortened to keep the files small.
"""
from __future__ import annotations

import argparse
import math
import sys
import tempfile
from pathlib import Path

from loosegait.engine import run
from loosegait.scenario import load_scenario

REPO = Path(__file__).resolve().parents[1]
MATERIALS = ("sand", "soil", "mud", "snow")
SLOPES_DEG = (0, 10)
DURATION = 4.0


def golden_overrides(material: str, slope_deg: int) -> list[str]:
    return [f"material.preset={material}", f"terrain.slope={math.radians(slope_deg)!r}",
            f"run.duration={DURATION!r}"]


def golden_name(material: str, slope_deg: int) -> str:
    return f"{material}_{slope_deg}deg.csv"


def render(material: str, slope_deg: int) -> bytes:
    sc = load_scenario(REPO / "scenarios" / "reference.ini", golden_overrides(material, slope_deg))
    with tempfile.TemporaryDirectory() as tmp:
        run(sc, tmp, deterministic=True)
        return (Path(tmp) / "trace.csv").read_bytes()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=REPO / "tests" / "golden")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    for material in MATERIALS:
        for slope in SLOPES_DEG:
            path = args.out / golden_name(material, slope)
            path.write_bytes(render(material, slope))
            print(f"wrote {path.relative_to(REPO) if path.is_relative_to(REPO) else path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Walk every material preset over flat and sloped terrain, with and without grass.

    python3 scripts/run_matrix.py [--duration 10] [--out DIR]

Prints one metrics row per run; with --out each run's artifacts go to
DIR/<material>_<slope>deg_<grass>.
"""
from __future__ import annotations

import argparse
import itertools
import math
import sys
from pathlib import Path

from loosegait.engine import run
from loosegait.scenario import load_scenario

REPO = Path(__file__).resolve().parents[1]
MATERIALS = ("sand", "soil", "mud", "snow")
SLOPES_DEG = (0, 5, 10)
GRASS = (0.0, 0.5, 0.9)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--resolution", type=int, default=512)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args(argv)

    print(f"{'material':<8} {'slope':>5} {'grass':>5} {'result':<13} {'frames':>6} "
          f"{'carved_m3':>10} {'deposited_m3':>12} {'max_tilt':>8} {'median_ms':>9}")
    for material, slope, grass in itertools.product(MATERIALS, SLOPES_DEG, GRASS):
        overrides = [f"material.preset={material}", f"terrain.slope={math.radians(slope)!r}",
                     f"terrain.resolution={args.resolution}", f"run.duration={args.duration!r}",
                     f"vegetation.class_height={grass!r}"]
        sc = load_scenario(REPO / "scenarios" / "reference.ini", overrides)
        out = None
        if args.out is not None:
            out = args.out / f"{material}_{slope}deg_{grass:g}"
        m = run(sc, out).metrics
        print(f"{material:<8} {slope:>5} {grass:>5g} {m['termination']:<13} {m['frames']:>6} "
              f"{m['total_carved']:>10.4g} {m['total_deposited']:>12.4g} "
              f"{m['max_abs_tilt']:>8.4f} {m['median_step_ms']:>9.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

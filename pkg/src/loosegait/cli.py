"""Command-line entry point.

    loosegait run SCENARIO --out DIR [--set section.key=value ...] [--obj]
    loosegait presets
    loosegait bench --grid N --frames M

Exit status of ``run``: 0 on completion (also when the walk reaches the
terrain edge), 1 on scenario or I/O errors, 2 when the character falls over.
"""
from __future__ import annotations

import argparse
import statistics
import sys
import time

from . import engine
from .scenario import (RunConfig, Scenario, ScenarioError, TerrainConfig, load_presets,
                       load_scenario, resolve)

BENCH_GRIDS = (128, 256, 512, 1024)


def cmd_run(scenario_path: str, out_dir: str, overrides: list[str],
            export_obj: bool = False) -> int:
    try:
        scenario = load_scenario(scenario_path, overrides)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        result = engine.run(scenario, out_dir, export_obj=export_obj)
    except OSError as exc:
        print(f"error: cannot write artifacts: {exc}", file=sys.stderr)
        return 1
    m = result.metrics
    print(f"{result.termination}: {m['frames']} frames, "
          f"carved {m['total_carved']:.6g} m3, deposited {m['total_deposited']:.6g} m3, "
          f"max |tilt| {m['max_abs_tilt']:.4g} rad")
    if result.fell:
        print(f"error: {result.message}", file=sys.stderr)
        return 2
    if result.termination == "edge_reached":
        print(f"note: {result.message}", file=sys.stderr)
    return 0


def preset_checks(presets: dict) -> list[tuple[str, bool]]:
    sand, soil, mud, snow = (presets[k] for k in ("sand", "soil", "mud", "snow"))
    return [
        ("sand is non-compressible (compression = 0)", sand["compression"] == 0.0),
        ("sand has the largest smoothing", sand["smoothness"] == max(
            p["smoothness"] for p in (sand, soil, mud, snow))),
        ("soil depth < sand depth", soil["depth"] < sand["depth"]),
        ("soil compression > sand compression", soil["compression"] > sand["compression"]),
        ("mud and snow carve deeper than sand and soil",
         min(mud["depth"], snow["depth"]) > max(sand["depth"], soil["depth"])),
        ("mud prints sharper than snow (smoothness)", mud["smoothness"] < snow["smoothness"]),
    ]


def cmd_presets() -> int:
    presets = load_presets()
    print(f"{'name':<6} {'depth':>10} {'compression':>12} {'smoothness':>11}")
    for name in ("sand", "soil", "mud", "snow"):
        p = presets[name]
        print(f"{name:<6} {p['depth']:>10g} {p['compression']:>12g} {p['smoothness']:>11g}")
    print()
    for label, ok in preset_checks(presets):
        print(f"[{'ok' if ok else 'VIOLATED'}] {label}")
    return 0


def bench(grid: int, frames: int) -> dict:
    """Per-frame wall time of the full step on a synthetic mud walk."""
    scenario = resolve(Scenario(terrain=TerrainConfig(resolution=grid, noise_amp=0.02),
                                run=RunConfig(duration=frames / 60.0)))
    times: list[float] = []
    while len(times) < frames:
        world = engine.init_world(scenario)
        while len(times) < frames:
            t0 = time.perf_counter()
            try:
                engine.step(world)
            except engine.EdgeReached:
                break
            times.append((time.perf_counter() - t0) * 1e3)
    return {
        "grid": grid,
        "frames": frames,
        "median_ms": statistics.median(times),
        "p99_ms": engine.percentile(times, 99),
    }


def cmd_bench(grid: int, frames: int) -> int:
    result = bench(grid, frames)
    for key in ("grid", "frames"):
        print(f"{key}: {result[key]}")
    print(f"median_ms: {result['median_ms']:.4f}")
    print(f"p99_ms: {result['p99_ms']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loosegait",
                                     description="Walking character on deformable loose terrain")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", required=True, help="artifact directory")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override a scenario value")
    p_run.add_argument("--obj", action="store_true", help="also export OBJ terrain meshes")

    sub.add_parser("presets", help="list built-in ground materials")

    p_bench = sub.add_parser("bench", help="time the per-frame hot path")
    p_bench.add_argument("--grid", type=int, default=512, choices=BENCH_GRIDS)
    p_bench.add_argument("--frames", type=int, default=600)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.out, args.overrides, args.obj)
    if args.command == "presets":
        return cmd_presets()
    if args.frames <= 0:
        print("error: --frames must be positive", file=sys.stderr)
        return 1
    return cmd_bench(args.grid, args.frames)


if __name__ == "__main__":
    sys.exit(main())

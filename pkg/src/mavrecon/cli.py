"""Command-line surface: run missions, generate fixtures, quantify spall
clouds, evaluate detections, and plan single queries.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 an --assert-*
threshold was not met.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .configio import deep_update, load_config_file
from .detmetrics import boxes_from_json, map_range
from .grid import write_pgm
from .mission import Mission, MissionConfig
from .planner import RrtParams, plan_rrt_star, inflate
from .planner.costmap import CostmapParams
from .spall3d import (Carve, ColumnSpec, gen_column, load_cloud, preprocess,
                      save_ply, segment_prism, spall_volume)
from .worldgen import dead_end_world, empty_room_world, office_world
from .worldsim import load_world, save_world

USAGE_ERROR, RUNTIME_ERROR, ASSERT_FAILED = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _resolve_seed(flag_seed, config_tree) -> int:
    if flag_seed is not None:
        return flag_seed
    if "seed" in config_tree:
        return int(config_tree["seed"])
    env = os.environ.get("RECON_SEED")
    if env is not None:
        return int(env)
    return 0


def _build_mission_config(args) -> MissionConfig:
    tree = load_config_file(args.config) if args.config else {}
    base = MissionConfig().to_dict()
    merged = deep_update(base, tree)
    merged["world_pgm"] = str(args.world)
    merged["world_meta"] = str(args.meta)
    merged["seed"] = _resolve_seed(args.seed, tree)
    if getattr(args, "time_budget", None) is not None:
        merged.setdefault("policy", {})
        merged["policy"]["time_budget"] = args.time_budget
    cfg = MissionConfig.from_dict(merged)
    return cfg


def cmd_explore(args) -> int:
    cfg = _build_mission_config(args)
    mission = Mission(cfg)
    report = mission.run()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "report.json", canonical=args.canonical)
    report.save_trajectory_csv(out / "trajectory.csv")
    write_pgm(mission.best_map, out / "map.pgm")
    summary = (f"seed={report.seed} terminated_by={report.terminated_by} "
               f"coverage={report.coverage:.4f} agreement={report.map_agreement:.4f} "
               f"collisions={report.collision_events} sim_time={report.sim_time:.1f}s")
    if args.json:
        print(report.to_json(canonical=args.canonical))
    else:
        print(summary)
    if args.assert_coverage is not None and report.coverage < args.assert_coverage:
        print(f"assert failed: coverage {report.coverage:.4f} < {args.assert_coverage}",
              file=sys.stderr)
        return ASSERT_FAILED
    if args.assert_agreement is not None and report.map_agreement < args.assert_agreement:
        print(f"assert failed: agreement {report.map_agreement:.4f} "
              f"< {args.assert_agreement}", file=sys.stderr)
        return ASSERT_FAILED
    if args.assert_no_collision and report.collision_events:
        print("assert failed: collision occurred", file=sys.stderr)
        return ASSERT_FAILED
    return 0


def cmd_gen_world(args) -> int:
    if args.preset == "office":
        world = office_world(width=args.width, height=args.height,
                             resolution=args.res, door_width=args.door_width)
    elif args.preset == "empty":
        world = empty_room_world(width=args.width, height=args.height,
                                 resolution=args.res)
    elif args.preset == "deadend":
        world = dead_end_world(resolution=args.res)
    else:  # pragma: no cover - argparse choices guard this
        raise ValueError(args.preset)
    save_world(world, args.out_pgm, args.out_meta)
    print(f"wrote {args.out_pgm} and {args.out_meta} "
          f"({world.gt_grid.width}x{world.gt_grid.height} cells)")
    return 0


def _parse_carve(text: str) -> Carve:
    try:
        kind, center, size = text.split(";")
        cx, cy, cz = (float(v) for v in center.split(","))
        sx, sy, sz = (float(v) for v in size.split(","))
    except ValueError:
        raise ValueError(
            f"carve must look like kind;cx,cy,cz;sx,sy,sz -- got {text!r}") from None
    return Carve(kind, (cx, cy, cz), (sx, sy, sz))


def cmd_gen_column(args) -> int:
    carves = tuple(_parse_carve(c) for c in args.carve or [])
    spec = ColumnSpec(half_extents=(args.half_x, args.half_y), height=args.height,
                      carves=carves, density=args.density,
                      noise_sigma=args.noise, yaw=args.yaw)
    seed = _resolve_seed(args.seed, {})
    cloud, gt = gen_column(spec, rng_mod.stream(seed, "gen-column"),
                           oracle_voxel=args.oracle_voxel)
    save_ply(cloud, args.out_ply)
    gt_payload = {
        "gt_volume_m3": gt,
        "gt_volume_cm3": gt * 1e6,
        "oracle_voxel": args.oracle_voxel,
        "seed": seed,
        "half_extents": [args.half_x, args.half_y],
        "height": args.height,
        "density": args.density,
        "noise_sigma": args.noise,
        "carves": [{"kind": c.kind, "center": list(c.center),
                    "size": list(c.size)} for c in carves],
    }
    Path(args.out_gt).write_text(json.dumps(gt_payload, indent=2) + "\n")
    print(f"wrote {args.out_ply} ({len(cloud)} points), "
          f"gt volume {gt * 1e6:.1f} cm3")
    return 0


def _parse_volume(text: str) -> float:
    text = text.strip().lower()
    if text.endswith("cm3"):
        return float(text[:-3]) * 1e-6
    if text.endswith("m3"):
        return float(text[:-2])
    return float(text)  # cubic meters


def cmd_spall(args) -> int:
    cloud = load_cloud(args.cloud)
    if not args.no_preprocess:
        cloud = preprocess(cloud, voxel=args.voxel, outlier=(args.sor_k, args.sor_mult))
    seed = _resolve_seed(args.seed, {})
    prism = segment_prism(cloud, rng=rng_mod.stream(seed, "spall"))
    report = spall_volume(cloud, prism, slice_h=args.slice, n_bins=args.bins)
    if args.out_json:
        report.save_json(args.out_json)
    if args.out_csv:
        report.save_csv(args.out_csv)
    print(f"volume={report.volume_cm3:.1f}cm3 slices={len(report.slices)} "
          f"footprint={2 * prism.half_extents[0]:.3f}x{2 * prism.half_extents[1]:.3f}m")
    if args.assert_volume is not None:
        want = _parse_volume(args.assert_volume)
        err = abs(report.volume_m3 - want) / want if want > 0 else float("inf")
        if err > args.tol:
            print(f"assert failed: volume error {err:.3f} > tol {args.tol}",
                  file=sys.stderr)
            return ASSERT_FAILED
    return 0


def cmd_eval_det(args) -> int:
    preds = boxes_from_json(args.pred)
    gts = boxes_from_json(args.gt)
    result = map_range(preds, gts)
    payload = result.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(f"map50={result.map50:.4f} map5095={result.map5095:.4f} "
              f"precision={result.precision:.4f} recall={result.recall:.4f} "
              f"f1={result.f1:.4f}")
    return 0


def cmd_plan(args) -> int:
    world = load_world(args.world, args.meta)
    params = CostmapParams(lethal_radius=args.lethal_radius,
                           inflation_radius=args.inflation_radius,
                           unknown_is_lethal=False)
    costmap = inflate(world.gt_grid, args.inflation_radius, params)
    start = tuple(float(v) for v in args.start.split(","))
    goal = tuple(float(v) for v in args.goal.split(","))
    seed = _resolve_seed(args.seed, {})
    result = plan_rrt_star(costmap, start, goal,
                           RrtParams(max_iters=args.iters),
                           rng_mod.stream(seed, "plan"))
    if args.out_json:
        Path(args.out_json).write_text(json.dumps({
            "success": result.success,
            "cost": result.cost if result.success else None,
            "iterations": result.iters,
            "tree_size": result.n_nodes,
        }, indent=2) + "\n")
    if not result.success:
        print("planning failed", file=sys.stderr)
        return RUNTIME_ERROR
    if args.out_csv:
        lines = ["x,y"] + [f"{p[0]:.6f},{p[1]:.6f}" for p in result.path]
        Path(args.out_csv).write_text("\n".join(lines) + "\n")
    print(f"cost={result.cost:.3f} waypoints={len(result.path)} "
          f"tree={result.n_nodes}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mavrecon",
                     description="Deterministic indoor inspection simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explore", parents=[], help="run a full exploration mission")
    p.add_argument("--world", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="run")
    p.add_argument("--time-budget", type=float, default=None)
    p.add_argument("--canonical", action="store_true",
                   help="byte-stable report.json (drops wall-clock timing)")
    p.add_argument("--json", action="store_true", help="stream report to stdout")
    p.add_argument("--assert-coverage", type=float, default=None)
    p.add_argument("--assert-agreement", type=float, default=None)
    p.add_argument("--assert-no-collision", action="store_true")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("gen-world", help="write a parametric test world")
    p.add_argument("--preset", choices=["office", "empty", "deadend"],
                   default="office")
    p.add_argument("--out-pgm", required=True)
    p.add_argument("--out-meta", required=True)
    p.add_argument("--width", type=float, default=20.0)
    p.add_argument("--height", type=float, default=15.0)
    p.add_argument("--res", type=float, default=0.05)
    p.add_argument("--door-width", type=float, default=1.3)
    p.set_defaults(func=cmd_gen_world)

    p = sub.add_parser("gen-column", help="write a synthetic spalled column cloud")
    p.add_argument("--out-ply", required=True)
    p.add_argument("--out-gt", required=True)
    p.add_argument("--half-x", type=float, default=0.15)
    p.add_argument("--half-y", type=float, default=0.15)
    p.add_argument("--height", type=float, default=1.2)
    p.add_argument("--density", type=float, default=10000.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--yaw", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--oracle-voxel", type=float, default=0.001)
    p.add_argument("--carve", action="append",
                   help="kind;cx,cy,cz;sx,sy,sz (repeatable)")
    p.set_defaults(func=cmd_gen_column)

    p = sub.add_parser("spall", help="quantify spall volume from a point cloud")
    p.add_argument("--cloud", required=True)
    p.add_argument("--slice", type=float, default=0.01)
    p.add_argument("--bins", type=int, default=360)
    p.add_argument("--voxel", type=float, default=0.005)
    p.add_argument("--sor-k", type=int, default=8)
    p.add_argument("--sor-mult", type=float, default=2.0)
    p.add_argument("--no-preprocess", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--assert-volume", default=None,
                   help="expected volume, e.g. 1000cm3 or 0.001m3")
    p.add_argument("--tol", type=float, default=0.15)
    p.set_defaults(func=cmd_spall)

    p = sub.add_parser("eval-det", help="evaluate detections against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_det)

    p = sub.add_parser("plan", help="single RRT* query on a known world")
    p.add_argument("--world", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--start", required=True, help="x,y")
    p.add_argument("--goal", required=True, help="x,y")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--lethal-radius", type=float, default=0.32)
    p.add_argument("--inflation-radius", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=cmd_plan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

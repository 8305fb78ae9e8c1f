"""Command-line front end: run, calibrate, score, graph, serve, replay."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import ENV_CONFIG, BenchConfig, load_config
from .errors import CalibrationError, ConfigError, FlipperBenchError, ValidationError
from .gridmap import build_arena
from .logstore import read_log, write_log_path
from .metrics import CalibrationTable, aggregate, calibrate, score_log, sector_slices
from .policies import POLICY_NAMES, HeuristicModePolicy, ScriptedDriver, build_policy
from .report import quality_load_graph, read_scores_csv, write_report_tables
from .runner import (
    ScriptedOperator,
    make_front_mode_chooser,
    run_episode,
    straight_waypoints,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def scripted_components(cfg: BenchConfig, policy_name: str, hmap):
    """Policy instance plus a matching scripted operator."""
    policy = build_policy(policy_name, cfg.policy, cfg.geometry, hmap)
    end = max(s1 for _, s1 in cfg.arena.sectors) + 1.0
    driver = ScriptedDriver(
        straight_waypoints(cfg.episode.start_x, min(end, cfg.arena.x_max - 1.0),
                           cfg.arena.track_y)
    )
    mode_chooser = None
    front_chooser = None
    if "discrete" in policy_name:
        mode_chooser = HeuristicModePolicy(cfg.policy, cfg.geometry, hmap).select_mode
    if policy_name == "semi-afc":
        front_chooser = make_front_mode_chooser(hmap, cfg.geometry)
    operator = ScriptedOperator(
        driver, cfg.mapping, mode_chooser=mode_chooser, front_mode_chooser=front_chooser
    )
    return policy, operator


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.policy not in POLICY_NAMES:
        print(
            f"unknown policy {args.policy!r}; registered: {', '.join(POLICY_NAMES)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    cfg.episode.seed = args.seed
    cfg.episode.arena_id = cfg.arena_id
    hmap = build_arena(cfg.arena)
    policy, operator = scripted_components(cfg, args.policy, hmap)
    sectors = cfg.sectors()
    t0 = time.time()
    log = run_episode(
        policy, operator, hmap, sectors, cfg.geometry, cfg.episode,
        cfg.mapping, cfg.policy.theta_dot_max,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.policy}-seed{args.seed}.jsonl"
    write_log_path(log, path)
    groups = sector_slices(log, sectors)
    print(f"status: {log.footer.status} {log.footer.reason}".rstrip())
    for sec in sectors:
        mark = "ok" if groups[sec.id].traversed else "FAIL"
        print(f"  sector {sec.id:2d} [{sec.s_start:5.1f}, {sec.s_end:5.1f}): {mark}")
    print(f"wrote {path} ({len(log.ticks)} ticks, {time.time() - t0:.1f}s wall)")
    return EXIT_OK


def _load_logs(log_dir):
    paths = sorted(Path(log_dir).glob("*.jsonl"))
    if not paths:
        raise ValidationError(f"no .jsonl logs under {log_dir}")
    return [read_log(p) for p in paths]


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    logs = _load_logs(args.logs)
    try:
        table = calibrate(logs, cfg.sectors(), cfg.geometry.d_d)
    except CalibrationError as e:
        print(f"calibration error: {e}", file=sys.stderr)
        return EXIT_DATA
    table.to_json(args.out)
    for sid in sorted(table.cl_min):
        print(f"  sector {sid:2d}: CL_min = {table.cl_min[sid]:.3f} s")
    print(f"  s_max = {table.s_max:.3f} m/s^2")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = load_config(args.config)
    calib = CalibrationTable.from_json(args.calibration)
    logs = _load_logs(args.logs)
    sectors = cfg.sectors()
    points = []
    for log in logs:
        points.extend(score_log(log, sectors, calib, args.literal_windows))
    paths = write_report_tables(points, args.out)
    for name, p in sorted(paths.items()):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_graph(args) -> int:
    points = read_scores_csv(args.scores)
    if not points:
        print("empty score set", file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    svg = out / "quality_load.svg"
    csv_path = out / "quality_load.csv"
    quality_load_graph(points, svg, csv_path)
    print(f"wrote {svg}\nwrote {csv_path}")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = load_config(args.config)
    calib = CalibrationTable.from_json(args.calibration)
    log = read_log(args.log)
    points = score_log(log, cfg.sectors(), calib, args.literal_windows)
    print("method,obstacle,traversed,s_n,d_n,tq_n,cl_raw,cl_n")
    for p in points:
        print(
            f"{p.method},{p.obstacle},{int(p.traversed)},{p.s_n:.4f},"
            f"{p.d_n:.4f},{p.tq_n:.4f},{p.cl_raw:.4f},{p.cl_n:.4f}"
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    from .bridge import serve

    cfg = load_config(args.config)
    serve(args.port, cfg, args.policy, Path(args.out))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flipperbench",
        description="Flipper-robot traversal benchmark: simulate, score, plot.",
        epilog=f"Config default comes from ${ENV_CONFIG} when --config is omitted.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default="out"):
        sp.add_argument("--config", default=None, help="TOML config path")
        sp.add_argument("--out", default=out_default)

    run = sub.add_parser("run", help="run one scripted episode and write its log")
    common(run, "logs")
    run.add_argument("--policy", required=True)
    run.add_argument("--seed", type=int, default=0)
    run.set_defaults(fn=cmd_run)

    cal = sub.add_parser("calibrate", help="derive CL_min/s_max from logs")
    cal.add_argument("--config", default=None)
    cal.add_argument("--logs", required=True)
    cal.add_argument("--out", default="calibration.json")
    cal.set_defaults(fn=cmd_calibrate)

    sc = sub.add_parser("score", help="score logs into report CSVs")
    common(sc, "reports")
    sc.add_argument("--logs", required=True)
    sc.add_argument("--calibration", required=True)
    sc.add_argument("--literal-windows", action="store_true")
    sc.set_defaults(fn=cmd_score)

    gr = sub.add_parser("graph", help="emit the Quality-Load scatter (SVG+CSV)")
    common(gr, "reports")
    gr.add_argument("--scores", required=True)
    gr.set_defaults(fn=cmd_graph)

    rp = sub.add_parser("replay", help="re-score one recorded log")
    rp.add_argument("--config", default=None)
    rp.add_argument("--log", required=True)
    rp.add_argument("--calibration", required=True)
    rp.add_argument("--literal-windows", action="store_true")
    rp.set_defaults(fn=cmd_replay)

    sv = sub.add_parser("serve", help="teleoperation bridge for the console")
    common(sv, "logs")
    sv.add_argument("--port", type=int, default=8765)
    sv.add_argument("--policy", default="mfc-continuous")
    sv.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError,) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FlipperBenchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

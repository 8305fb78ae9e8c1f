"""Acceptance gate: every release criterion as one pass/fail check.

Each test covers one criterion at its stated tolerance and prints a single
summary line, so `pytest tests/test_acceptance.py -v -s` reads as a release
checklist.  The slow arena traversals live at the end of the file.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from flipperbench import cli
from flipperbench.config import load_config
from flipperbench.geometry import FLIPPER_LIMIT, RobotGeometry
from flipperbench.gridmap import HeightMap, build_arena, compute_normals, downsample
from flipperbench.logstore import CommandFrame
from flipperbench.metrics import (
    QualityLoadPoint,
    cognitive_load,
    linear_norm,
    sector_slices,
    sigmoid_norm,
)
from flipperbench.policies import (
    AntiStuckWrapper,
    DiscreteModePolicy,
    OperatorInput,
    PolicyConfig,
    build_policy,
    oafc_target,
)
from flipperbench.report import quality_load_graph
from flipperbench.runner import run_episode
from flipperbench.sim import initial_state, step

from conftest import make_flat, make_ramp
import published_tables as tables

OBSTACLES = range(1, 14)


def report(name: str, t0: float, detail: str = ""):
    extra = f" {detail}" if detail else ""
    print(f"\n[acceptance] {name}: PASS ({time.monotonic() - t0:.2f}s){extra}")


def simulate(policy, hmap, geometry, op_fn, duration, pconf, dt=0.02,
             on_tick=None):
    """Minimal fixed-step episode loop for closed-loop policy checks."""
    state = initial_state(hmap, geometry, 0.0, 0.0, 0.0, (0.0,) * 4)
    policy.reset()
    lim = pconf.theta_dot_max
    while state.t < duration:
        op = op_fn(state)
        cmd = policy.command(state, op, dt)
        theta_dot = tuple(
            max(-lim, min(lim, w)) for w in cmd.resolve(state.theta, dt)
        )
        state = step(state, (op.v, op.omega, theta_dot), dt, hmap, geometry)
        if on_tick is not None:
            on_tick(state)
    return state


# --- published-table arithmetic --------------------------------------------

def test_quality_equals_mean_of_shock_and_distance():
    t0 = time.monotonic()
    cells = 0
    for method in tables.METHODS:
        for i, quality in enumerate(tables.QUALITY[method]):
            if quality is None:
                continue
            s = tables.SHOCK[method][i]
            d = tables.DISTANCE[method][i]
            assert abs(quality - (s + d) / 2) <= 0.005 + 1e-9, (
                f"{method} obstacle {i + 1}: {quality} vs ({s}+{d})/2")
            cells += 1
    assert cells > 50
    assert time.monotonic() - t0 < 1.0
    report("quality = (shock + distance)/2 fixture suite", t0,
           f"{cells} cells, tol 0.005")


def test_penalized_means_match_published_rows():
    t0 = time.monotonic()
    shock = [v or 0.0 for v in tables.SHOCK["mfc-discrete"]]
    assert abs(sum(shock) / 13 - 0.375) <= 0.005
    quality = [v or 0.0 for v in tables.QUALITY["mfc-continuous"]]
    assert abs(sum(quality) / 13 - 0.77) <= 0.005
    assert time.monotonic() - t0 < 1.0
    report("penalized row means 0.375 / 0.77", t0, "tol 0.005")


# --- normalization and load properties --------------------------------------

def test_normalization_properties():
    t0 = time.monotonic()
    assert sigmoid_norm(0.0, 1.7) == 1.0
    for x_hat in (0.3, 1.0, 42.0):
        assert abs(sigmoid_norm(x_hat, x_hat) - 0.537883) <= 1e-6
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        x_hat = rng.uniform(0.1, 10.0)
        a, b = rng.uniform(0.0, 50.0 * x_hat, size=2)
        if a == b:
            continue
        lo, hi = min(a, b), max(a, b)
        assert sigmoid_norm(hi, x_hat) < sigmoid_norm(lo, x_hat)
    assert linear_norm(0.0, 0.08) == 0.0
    assert linear_norm(0.08, 0.08) == 1.0
    assert linear_norm(-1.0, 0.08) == 0.0  # clamped below
    assert linear_norm(5.0, 0.08) == 1.0  # clamped above
    assert time.monotonic() - t0 < 1.0
    report("normalization: N(0)=1, N(x,x)=0.537883, monotone; L clamps", t0,
           "1000 random pairs")


def hold_frames(hz: float, duration: float):
    n = round(duration * hz)
    buttons = (1,) + (0,) * 10
    axes = (0.0,) * 4
    return [CommandFrame((i + 1) / hz, buttons, axes) for i in range(n)]


def test_cognitive_load_additive_and_rate_invariant():
    t0 = time.monotonic()
    rng = np.random.default_rng(7)
    ts = np.cumsum(rng.uniform(0.01, 0.2, size=60))
    frames = [
        CommandFrame(float(t),
                     tuple(int(b) for b in rng.integers(0, 2, size=11)),
                     tuple(float(a) for a in rng.uniform(-1, 1, size=4)))
        for t in ts
    ]
    whole = cognitive_load(frames, t_prev=0.0)
    for k in (1, 17, 30, 59):
        left = cognitive_load(frames[:k], t_prev=0.0)
        right = cognitive_load(frames[k:], t_prev=frames[k - 1].t)
        assert abs(whole - (left + right)) <= 1e-9
    for hz in (10.0, 50.0, 1000.0):
        cl = cognitive_load(hold_frames(hz, 10.0), t_prev=0.0)
        assert abs(cl - 10.0) <= 1e-9
    assert time.monotonic() - t0 < 1.0
    report("load additive over splits; 10 s hold = 10 at 10/50/1000 Hz", t0,
           "tol 1e-9")


# --- closed-loop control criteria -------------------------------------------

def test_clearance_regulator_converges_from_grounded_start():
    t0 = time.monotonic()
    geometry = RobotGeometry(track_drop=0.0)  # settles belly-on-ground: d = 0
    pconf = PolicyConfig(d_d=0.08)
    flat = make_flat()
    policy = build_policy("semi-afc", pconf, geometry, flat)
    state = simulate(policy, flat, geometry, lambda s: OperatorInput(),
                     duration=10.0, pconf=pconf)
    assert abs(state.d - pconf.d_d) < 0.02 * pconf.d_d
    assert time.monotonic() - t0 < 5.0
    report("clearance regulator: |d - d_d| < 2% within 10 s sim", t0,
           f"d={state.d:.4f} vs d_d={pconf.d_d}")


def test_slope_alignment_on_uniform_ramps():
    t0 = time.monotonic()
    geometry = RobotGeometry()
    pconf = PolicyConfig(d_d=geometry.d_d)
    for alpha in (10, 20, 30, 45):
        m = make_ramp(alpha, x_ramp=1.5)
        low = downsample(m, pconf.oafc_lowres_factor)
        normals = compute_normals(low)
        state = initial_state(m, geometry, 1.0, 0.0, 0.0, (0.0,) * 4)
        for side in ("left", "right"):
            got = oafc_target(normals, state, side, pconf, geometry)
            assert got is not None
            assert abs(math.degrees(got) + alpha) < 2.0

            # independent scan over the lookahead region's cells
            tip = geometry.length / 2 + geometry.flipper_length
            sy = geometry.track_y if side == "left" else -geometry.track_y
            x0, y0 = state.x + tip, state.y + sy
            grid = normals.normals
            best = None
            for i in range(grid.shape[0]):
                for j in range(grid.shape[1]):
                    cx = normals.origin[0] + j * normals.resolution
                    cy = normals.origin[1] + i * normals.resolution
                    if not (x0 - normals.resolution / 2 <= cx
                            <= x0 + pconf.oafc_lookahead
                            + normals.resolution / 2):
                        continue
                    if abs(cy - y0) > geometry.track_width + normals.resolution / 2:
                        continue
                    incline = math.acos(min(1.0, grid[i, j, 2]))
                    if best is None or incline > best[0] + 1e-12:
                        best = (incline, grid[i, j])
            slope = -best[1][0] / best[1][2]
            expected = max(-FLIPPER_LIMIT,
                           min(FLIPPER_LIMIT, -math.atan(slope)))
            assert got == pytest.approx(expected, abs=math.radians(2))
    assert time.monotonic() - t0 < 5.0
    report("slope alignment within 2 deg on 10/20/30/45 deg ramps", t0,
           "verified against brute-force cell scan")


def ridge_map():
    """Flat floor with a centre ridge the belly high-centers on."""
    m = make_flat(x_len=10.0)
    h = m.heights.copy()
    xs = m.origin[0] + np.arange(h.shape[1]) * m.resolution
    ys = m.origin[1] + np.arange(h.shape[0]) * m.resolution
    mask = ((np.abs(ys)[:, None] <= 0.17)
            & (xs[None, :] >= 1.0) & (xs[None, :] <= 2.5))
    h[mask] += 0.12
    return HeightMap(m.resolution, m.origin, h)


def test_stuck_recovery_liveness_and_retrigger():
    t0 = time.monotonic()
    geometry = RobotGeometry()
    pconf = PolicyConfig(d_d=geometry.d_d)
    hmap = ridge_map()
    policy = AntiStuckWrapper(DiscreteModePolicy(pconf), pconf)
    history = []

    def on_tick(state):
        history.append((state.t, policy.stuck, policy.pending_since,
                        state.ground_speed))

    simulate(policy, hmap, geometry,
             lambda s: OperatorInput(v=0.3, mode_select="DRIVE_FLAT"),
             duration=30.0, pconf=pconf, on_tick=on_tick)

    first_stuck = next((h for h in history if h[1]), None)
    assert first_stuck is not None, "never entered the stuck override"
    t_stuck, _, stall_start, _ = first_stuck
    assert stall_start is not None
    assert t_stuck - stall_start <= pconf.stuck_persistence + 0.1

    recovered = any(
        gs > pconf.stuck_ground_speed_max
        for t, _, _, gs in history
        if t_stuck < t <= t_stuck + 5.0
    )
    assert recovered, "ground speed did not recover within 5 s of sim time"
    assert policy.entries >= 2, "flat-driving inner policy should re-ground"
    assert time.monotonic() - t0 < 10.0
    report("stuck override: timely entry, recovery < 5 s sim, re-trigger", t0,
           f"entries={policy.entries}")


# --- full-pipeline criteria --------------------------------------------------

def run_default_arena(policy_name: str):
    cfg = load_config(None)
    hmap = build_arena(cfg.arena)
    policy, operator = cli.scripted_components(cfg, policy_name, hmap)
    sectors = cfg.sectors()
    log = run_episode(policy, operator, hmap, sectors, cfg.geometry,
                      cfg.episode, cfg.mapping, cfg.policy.theta_dot_max)
    groups = sector_slices(log, sectors)
    return {sec.id for sec in sectors if groups[sec.id].traversed}


def test_stuck_override_traverses_superset_of_plain_discrete():
    t0 = time.monotonic()
    plain = run_default_arena("mfc-discrete")
    wrapped = run_default_arena("mfc-discrete-antistuck")
    assert wrapped >= plain
    assert plain != set(OBSTACLES), "plain discrete should fail somewhere"
    assert time.monotonic() - t0 < 120.0
    report("stuck override traverses a superset; plain discrete fails >= 1",
           t0, f"plain={sorted(plain)} wrapped={sorted(wrapped)}")


def test_semi_autonomous_front_mode_traverses_all_sectors():
    t0 = time.monotonic()
    traversed = run_default_arena("semi-afc")
    assert traversed == set(OBSTACLES)
    assert time.monotonic() - t0 < 120.0
    report("semi-autonomous front-mode run traverses all 13 sectors", t0)


SMALL_ARENA = """
arena_id = "mini"

[arena]
x_min = -2.0
x_max = 8.0
y_min = -1.5
y_max = 1.5
sectors = [[0.0, 4.0]]

[[arena.obstacle]]
kind = "pallet-stack"
x = 2.0
y = 0.0
length = 0.8
width = 2.4
height = 0.05
"""


def test_runs_and_reports_are_deterministic(tmp_path):
    t0 = time.monotonic()
    config = tmp_path / "arena.toml"
    config.write_text(SMALL_ARENA)

    def pipeline(root: Path):
        logs, reports = root / "logs", root / "reports"
        assert cli.main(["run", "--config", str(config), "--out", str(logs),
                         "--policy", "semi-afc", "--seed", "7"]) == 0
        calib = root / "calib.json"
        assert cli.main(["calibrate", "--config", str(config),
                         "--logs", str(logs), "--out", str(calib)]) == 0
        assert cli.main(["score", "--config", str(config), "--logs", str(logs),
                         "--calibration", str(calib),
                         "--out", str(reports)]) == 0
        assert cli.main(["graph", "--scores", str(reports / "scores.csv"),
                         "--out", str(reports)]) == 0
        return {
            "log": (logs / "semi-afc-seed7.jsonl").read_bytes(),
            "scores": (reports / "scores.csv").read_bytes(),
            "graph-csv": (reports / "quality_load.csv").read_bytes(),
            "graph-svg": (reports / "quality_load.svg").read_bytes(),
        }

    first = pipeline(tmp_path / "a")
    second = pipeline(tmp_path / "b")
    for key in first:
        assert first[key] == second[key], f"{key} differs between runs"
    assert time.monotonic() - t0 < 180.0
    report("seed-7 runs and run->score->graph byte-identical", t0)


def test_graph_emits_point_and_mean_rows_with_failure_pinning(tmp_path):
    t0 = time.monotonic()
    points = []
    for method in tables.METHODS:
        for i in OBSTACLES:
            quality = tables.QUALITY[method][i - 1]
            if quality is None:
                points.append(QualityLoadPoint(
                    method=method, obstacle=i, cl_n=1.0, tq_n=0.0,
                    s_n=0.0, d_n=0.0, traversed=False))
            else:
                points.append(QualityLoadPoint(
                    method=method, obstacle=i,
                    cl_n=tables.LOAD[method][i - 1], tq_n=quality,
                    s_n=tables.SHOCK[method][i - 1],
                    d_n=tables.DISTANCE[method][i - 1], traversed=True))
    svg, csv_path = tmp_path / "g.svg", tmp_path / "g.csv"
    quality_load_graph(points, svg, csv_path)
    rows = csv_path.read_text().splitlines()[1:]
    point_rows = [r for r in rows if ",*," not in r]
    mean_rows = [r for r in rows if ",*," in r]
    assert len(point_rows) == 78
    assert len(mean_rows) == 6
    for r in point_rows:
        method, obstacle, cl_n, tq_n, traversed = r.split(",")
        if traversed == "0":
            assert (float(cl_n), float(tq_n)) == (1.0, 0.0)
    assert time.monotonic() - t0 < 1.0
    report("graph: 78 point rows + 6 mean rows, failures at (1, 0)", t0)

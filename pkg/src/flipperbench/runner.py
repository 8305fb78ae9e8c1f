"""Episode execution: scripted operators and the tick loop producing logs."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from .errors import SettleError
from .geometry import RobotGeometry
from .gridmap import HeightMap, sample_height
from .logstore import CommandFrame, EpisodeLog, LogFooter, LogHeader, TickRecord
from .metrics import ObstacleSector
from .policies import (
    ControllerMapping,
    MODE_NAMES,
    OperatorInput,
    Policy,
    PolicyConfig,
    ScriptedDriver,
    manual_map,
)
from .sim import initial_state, step

CAPSIZE_LIMIT = math.radians(75)


@dataclass
class EpisodeConfig:
    dt: float = 0.02
    start_x: float = 0.0
    start_y: float = 0.0
    start_yaw: float = 0.0
    start_theta: tuple = (0.0, 0.0, 0.0, 0.0)
    sector_timeout: float = 90.0
    max_duration: float = 1200.0
    seed: int = 0
    arena_id: str = "default"


class OperatorSource:
    """Produces one CommandFrame per tick."""

    def reset(self) -> None:
        pass

    def frame(self, t: float, state) -> CommandFrame:
        raise NotImplementedError

    @property
    def done(self) -> bool:
        return False


class ScriptedOperator(OperatorSource):
    """Scripted stand-in for the human: drives waypoints and presses buttons.

    mode_chooser(state) -> discrete mode name, pressed as a mode button.
    front_mode_chooser(state) -> 'GCFC' | 'OAFC'; the operator taps the toggle
    button whenever the desired front mode differs from the one it believes is
    active (mirrors the edge-triggered switch in the policy).
    """

    def __init__(
        self,
        driver: ScriptedDriver,
        mapping: ControllerMapping,
        mode_chooser=None,
        front_mode_chooser=None,
    ):
        self.driver = driver
        self.mapping = mapping
        self.mode_chooser = mode_chooser
        self.front_mode_chooser = front_mode_chooser
        self.reset()

    def reset(self):
        self.driver.reset()
        self._front_mode = "GCFC"
        self._toggle_was_down = False

    @property
    def done(self) -> bool:
        return self.driver.done

    def frame(self, t: float, state) -> CommandFrame:
        m = self.mapping
        v, omega = self.driver.drive(state)
        axes = [0.0] * m.n_axes
        axes[m.axis_drive] = max(-1.0, min(1.0, v / m.v_max))
        axes[m.axis_turn] = max(-1.0, min(1.0, omega / m.omega_max))
        buttons = [0] * m.n_buttons
        if self.mode_chooser is not None:
            mode = self.mode_chooser(state)
            buttons[m.mode_buttons[MODE_NAMES.index(mode)]] = 1
        toggle = 0
        if self.front_mode_chooser is not None:
            desired = self.front_mode_chooser(state)
            if desired != self._front_mode and not self._toggle_was_down:
                toggle = 1
                self._front_mode = desired
        buttons[m.toggle_button] = toggle
        self._toggle_was_down = bool(toggle)
        return CommandFrame(t, tuple(buttons), tuple(axes))


def hash_heightmap(hmap: HeightMap) -> str:
    h = hashlib.sha256()
    h.update(repr((hmap.resolution, hmap.origin, hmap.heights.shape)).encode())
    h.update(hmap.heights.tobytes())
    return h.hexdigest()[:16]


def hash_geometry(geometry: RobotGeometry) -> str:
    return hashlib.sha256(repr(geometry).encode()).hexdigest()[:16]


def run_episode(
    policy: Policy,
    operator: OperatorSource,
    hmap: HeightMap,
    sectors,
    geometry: RobotGeometry,
    config: EpisodeConfig,
    mapping: ControllerMapping | None = None,
    theta_dot_max: float = 1.5,
) -> EpisodeLog:
    """Run one traversal at fixed dt until completion, failure, or abort."""
    mapping = mapping or ControllerMapping()
    policy.reset()
    operator.reset()
    header = LogHeader(
        method=policy.name, arena_id=config.arena_id,
        arena_hash=hash_heightmap(hmap), geometry_hash=hash_geometry(geometry),
        dt=config.dt, seed=config.seed,
    )
    log = EpisodeLog(header=header)
    dt = config.dt
    end_arc = max(sec.s_end for sec in sectors) if sectors else hmap.x_max - 1.0
    ordered = sorted(sectors, key=lambda s: s.s_start)

    state = initial_state(
        hmap, geometry, config.start_x, config.start_y, config.start_yaw,
        config.start_theta,
    )
    status, reason = "failed", "timeout"
    boundary_time = state.t  # time the robot last crossed a sector boundary
    next_boundary = _next_boundary(state.x, ordered, end_arc)
    while state.t < config.max_duration:
        if state.x >= end_arc:
            status, reason = "completed", ""
            break
        if operator.done:
            status, reason = "aborted", "operator done before final sector"
            break
        frame = operator.frame(state.t, state)
        op = manual_map(frame, mapping)
        if op.stop:
            status, reason = "aborted", "operator stop"
            break
        cmd = policy.command(state, op, dt)
        theta_dot = tuple(
            max(-theta_dot_max, min(theta_dot_max, w))
            for w in cmd.resolve(state.theta, dt)
        )
        try:
            state = step(state, (op.v, op.omega, theta_dot), dt, hmap, geometry)
        except SettleError as e:
            status, reason = "failed", f"settle: {e}"
            break
        log.ticks.append(TickRecord(
            t=state.t, x=state.x, y=state.y, z=state.z, yaw=state.yaw,
            pitch=state.pitch, roll=state.roll, theta=state.theta,
            v_cmd=state.v_cmd, omega_cmd=state.omega_cmd,
            ground_speed=state.ground_speed, d=state.d, accel=state.accel,
            frame=frame,
        ))
        if abs(state.pitch) > CAPSIZE_LIMIT or abs(state.roll) > CAPSIZE_LIMIT:
            status, reason = "failed", "capsize"
            break
        if state.x >= next_boundary:
            boundary_time = state.t
            next_boundary = _next_boundary(state.x, ordered, end_arc)
        elif state.t - boundary_time > config.sector_timeout:
            status, reason = "failed", "sector timeout"
            break
    log.footer = LogFooter(status=status, reason=reason)
    return log


def _next_boundary(x: float, ordered_sectors, end_arc: float) -> float:
    for sec in ordered_sectors:
        if x < sec.s_end:
            return sec.s_end
    return end_arc


def straight_waypoints(x_from: float, x_to: float, y: float, spacing: float = 2.0):
    n = max(2, int(math.ceil((x_to - x_from) / spacing)) + 1)
    return [(x_from + i * (x_to - x_from) / (n - 1), y) for i in range(n)]


def make_front_mode_chooser(hmap: HeightMap, geometry: RobotGeometry):
    """Scripted semi-AFC schedule: OAFC when terrain rises ahead, else GCFC.

    Rise is probed in the two flipper lanes, since that is the terrain the
    front pair will actually meet; obstacles between the tracks are a
    clearance problem, not an alignment problem, so they stay with GCFC.
    A collapsed clearance always forces GCFC regardless of lookahead.
    """
    def chooser(state) -> str:
        if state.d < 0.5 * geometry.d_d:
            return "GCFC"
        c, s = math.cos(state.yaw), math.sin(state.yaw)
        look = geometry.length / 2 + geometry.flipper_length
        rise = -math.inf
        for lane in (geometry.track_y, -geometry.track_y):
            lx, ly = -s * lane, c * lane
            here = _ground(hmap, state.x + lx, state.y + ly)
            rise = max(
                rise,
                max(
                    _ground(hmap, state.x + lx + c * (look + ahead),
                            state.y + ly + s * (look + ahead))
                    for ahead in (0.1, 0.3, 0.5)
                ) - here,
            )
        return "OAFC" if rise > 0.05 else "GCFC"
    return chooser


def _ground(hmap: HeightMap, x: float, y: float) -> float:
    if not hmap.contains(x, y):
        return 0.0
    return sample_height(hmap, x, y)

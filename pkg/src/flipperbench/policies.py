"""Flipper control policies: GCFC, OAFC, semi-AFC, discrete modes, anti-stuck,
manual mapping, and the scripted pure-pursuit driver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ParseError
from .geometry import FLIPPER_LIMIT, RobotGeometry
from .gridmap import HeightMap, SurfaceNormalMap, compute_normals, downsample
from .logstore import CommandFrame
from .sim import RobotState

MODE_NAMES = ("DRIVE_FLAT", "APPROACH_FRONT_UP", "CLIMB", "DESCENT", "MAX_SUPPORT")

DEFAULT_MODE_TABLE = {
    # (FL, FR, RL, RR) target angles in degrees; negative = tip raised
    "DRIVE_FLAT": (0.0, 0.0, 0.0, 0.0),
    "APPROACH_FRONT_UP": (-40.0, -40.0, 0.0, 0.0),
    "CLIMB": (-50.0, -50.0, 20.0, 20.0),
    "DESCENT": (20.0, 20.0, -45.0, -45.0),
    "MAX_SUPPORT": (40.0, 40.0, 40.0, 40.0),
}


@dataclass(frozen=True)
class FlipperCommand:
    """Either four angular velocities, or four absolute targets with a rate."""

    velocities: tuple | None = None
    targets: tuple | None = None
    rate: float = 1.5

    def __post_init__(self):
        if (self.velocities is None) == (self.targets is None):
            raise ConfigError("command must carry velocities or targets, not both")

    def resolve(self, theta, dt: float) -> tuple:
        """Angular velocities to apply this tick."""
        if self.velocities is not None:
            return self.velocities
        out = []
        for tgt, cur in zip(self.targets, theta):
            err = tgt - cur
            out.append(float(np.clip(err / dt, -self.rate, self.rate)))
        return tuple(out)


ZERO_COMMAND = FlipperCommand(velocities=(0.0, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class PolicyConfig:
    gcfc_gain: float = 2.0  # proportional gain p
    d_d: float = 0.08
    theta_dot_max: float = 1.5
    oafc_lookahead: float = 0.3
    oafc_lowres_factor: int = 4
    tracking_rate: float = 1.5
    stuck_v_cmd_min: float = 0.05
    stuck_ground_speed_max: float = 0.01
    stuck_persistence: float = 1.0
    stuck_release_clearance: float | None = None  # defaults to d_d
    stuck_cooldown: float = 0.0
    mode_table: dict = field(default_factory=lambda: dict(DEFAULT_MODE_TABLE))

    def __post_init__(self):
        if self.gcfc_gain <= 0 or self.d_d <= 0:
            raise ConfigError("gcfc gain and d_d must be positive")
        if self.stuck_release_clearance is None:
            object.__setattr__(self, "stuck_release_clearance", self.d_d)
        if set(self.mode_table) != set(MODE_NAMES):
            raise ConfigError(f"mode table must define exactly {MODE_NAMES}")

    def mode_targets(self, mode: str) -> tuple:
        if mode not in self.mode_table:
            raise ConfigError(f"unknown mode {mode!r}; expected one of {MODE_NAMES}")
        return tuple(math.radians(a) for a in self.mode_table[mode])


def gcfc_step(d: float, d_d: float, p: float) -> float:
    """Proportional clearance regulator: velocity pressing flippers down when low."""
    if d < 0 or d_d <= 0 or p <= 0:
        raise ConfigError("gcfc_step requires d >= 0, d_d > 0, p > 0")
    return p * (d_d - d)


def oafc_target(
    normals: SurfaceNormalMap,
    state: RobotState,
    side: str,
    config: PolicyConfig,
    geometry: RobotGeometry,
) -> float | None:
    """Front-flipper target aligning with the steepest normal ahead of the tip.

    Returns None when the lookahead region falls off the map (hold current).
    """
    if side not in ("left", "right"):
        raise ConfigError("side must be 'left' or 'right'")
    sy = geometry.track_y if side == "left" else -geometry.track_y
    c, s = math.cos(state.yaw), math.sin(state.yaw)
    # region start: front flipper tip at current angle, projected to the ground plane
    i = 0 if side == "left" else 1
    tip_fwd = geometry.length / 2 + geometry.flipper_length * math.cos(state.theta[i])
    x0 = state.x + c * tip_fwd - s * sy
    y0 = state.y + s * tip_fwd + c * sy
    half_w = geometry.track_width  # region width = flipper width (one track strip wide)

    res = normals.resolution
    n_along = max(2, int(math.ceil(config.oafc_lookahead / res)) + 1)
    n_across = max(2, int(math.ceil(2 * half_w / res)) + 1)
    along = np.linspace(0.0, config.oafc_lookahead, n_along)
    across = np.linspace(-half_w, half_w, n_across)
    ga, gc = np.meshgrid(along, across)
    px = x0 + c * ga - s * gc
    py = y0 + s * ga + c * gc

    grid = normals.normals
    n_rows, n_cols = grid.shape[0], grid.shape[1]
    jj = np.round((px - normals.origin[0]) / res).astype(int)
    ii = np.round((py - normals.origin[1]) / res).astype(int)
    valid = (jj >= 0) & (jj < n_cols) & (ii >= 0) & (ii < n_rows)
    if not valid.any():
        return None
    ii_v, jj_v = ii[valid], jj[valid]
    ga_v = ga[valid]
    nx = grid[ii_v, jj_v, 0]
    ny = grid[ii_v, jj_v, 1]
    nz = grid[ii_v, jj_v, 2]
    incline = np.arccos(np.clip(nz, -1.0, 1.0))
    # arg-max inclination; ties: nearest along-track, then lowest cell index
    flat_idx = ii_v.astype(np.int64) * n_cols + jj_v.astype(np.int64)
    order = np.lexsort((flat_idx, ga_v, -incline))
    best = order[0]
    slope = -(nx[best] * c + ny[best] * s) / nz[best]
    target = -math.atan(slope)
    return float(np.clip(target, -FLIPPER_LIMIT, FLIPPER_LIMIT))


class Policy:
    """Base: per-episode state machine mapping (state, operator input) to a command."""

    name = "policy"

    def reset(self) -> None:
        pass

    def command(self, state: RobotState, op: "OperatorInput", dt: float) -> FlipperCommand:
        raise NotImplementedError


@dataclass
class OperatorInput:
    """Operator intent already decoded from a CommandFrame."""

    v: float = 0.0
    omega: float = 0.0
    flipper_velocities: tuple = (0.0, 0.0, 0.0, 0.0)
    mode_select: str | None = None
    front_mode_toggle: bool = False
    stop: bool = False


@dataclass(frozen=True)
class ControllerMapping:
    """Gamepad layout: axis/button indices for the manual mapping."""

    axis_turn: int = 0  # L-stick x
    axis_drive: int = 1  # L-stick y
    axis_flipper: int = 3  # R-stick y
    modifier_buttons: tuple = (0, 1, 2, 3)  # L1, R1, L2, R2 -> FL, FR, RL, RR
    mode_buttons: tuple = (4, 5, 6, 7, 8)  # one per discrete mode
    toggle_button: int = 9  # semi-AFC front GCFC/OAFC switch
    stop_button: int = 10
    v_max: float = 0.6
    omega_max: float = 1.2
    n_axes: int = 4
    n_buttons: int = 11
    deadzone: float = 0.1


def manual_map(frame: CommandFrame, mapping: ControllerMapping) -> OperatorInput:
    """Decode one frame per the analog controller layout.

    Continuous flipper control drives one flipper at a time: R-stick y acts on
    whichever of the four modifier buttons is held (first in order wins).
    """
    if len(frame.axes) != mapping.n_axes or len(frame.buttons) != mapping.n_buttons:
        raise ParseError(
            f"frame has {len(frame.axes)} axes / {len(frame.buttons)} buttons, "
            f"mapping expects {mapping.n_axes} / {mapping.n_buttons}"
        )
    v = frame.axes[mapping.axis_drive] * mapping.v_max
    omega = frame.axes[mapping.axis_turn] * mapping.omega_max
    fv = [0.0, 0.0, 0.0, 0.0]
    for i, btn in enumerate(mapping.modifier_buttons):
        if frame.buttons[btn]:
            fv[i] = frame.axes[mapping.axis_flipper] * 1.5
            break
    mode = None
    for m, btn in zip(MODE_NAMES, mapping.mode_buttons):
        if frame.buttons[btn]:
            mode = m
            break
    return OperatorInput(
        v=v, omega=omega, flipper_velocities=tuple(fv), mode_select=mode,
        front_mode_toggle=bool(frame.buttons[mapping.toggle_button]),
        stop=bool(frame.buttons[mapping.stop_button]),
    )


class ManualContinuousPolicy(Policy):
    """MFC-continuous: flipper velocities come straight from the operator."""

    name = "mfc-continuous"

    def __init__(self, config: PolicyConfig):
        self.config = config

    def command(self, state, op, dt):
        vmax = self.config.theta_dot_max
        return FlipperCommand(
            velocities=tuple(float(np.clip(v, -vmax, vmax)) for v in op.flipper_velocities)
        )


class DiscreteModePolicy(Policy):
    """MFC-discrete: drives flippers to the selected mode's angle table."""

    name = "mfc-discrete"

    def __init__(self, config: PolicyConfig, initial_mode: str = "DRIVE_FLAT"):
        self.config = config
        self.initial_mode = initial_mode
        self.mode = initial_mode

    def reset(self):
        self.mode = self.initial_mode

    def command(self, state, op, dt):
        if op.mode_select is not None:
            self.mode = op.mode_select
        return FlipperCommand(
            targets=self.config.mode_targets(self.mode), rate=self.config.tracking_rate
        )


def discrete_mode_command(mode: str, config: PolicyConfig) -> FlipperCommand:
    """Absolute-target command for one of the five discrete modes."""
    return FlipperCommand(targets=config.mode_targets(mode), rate=config.tracking_rate)


class AntiStuckWrapper(Policy):
    """Overrides the inner policy with all-flippers-down while the robot is stuck."""

    def __init__(self, inner: Policy, config: PolicyConfig):
        self.inner = inner
        self.config = config
        self.name = inner.name + "-antistuck"
        self.reset()

    def reset(self):
        self.inner.reset()
        self.stuck = False
        self.pending_since: float | None = None
        self.moving_since: float | None = None
        self.cooldown_until = -math.inf
        self.entries = 0

    def command(self, state, op, dt):
        cfg = self.config
        if self.stuck:
            # movement must be sustained before it counts as a release;
            # one-tick speed blips from contact re-settling stay ignored
            if state.ground_speed > 2 * cfg.stuck_ground_speed_max:
                if self.moving_since is None:
                    self.moving_since = state.t
            else:
                self.moving_since = None
            moved = (
                self.moving_since is not None
                and state.t - self.moving_since >= 0.5 * cfg.stuck_persistence
            )
            if state.d >= cfg.stuck_release_clearance or moved:
                self.stuck = False
                self.pending_since = None
                self.moving_since = None
                self.cooldown_until = state.t + cfg.stuck_cooldown
            else:
                return FlipperCommand(
                    targets=(FLIPPER_LIMIT,) * 4, rate=cfg.tracking_rate
                )
        if not self.stuck:
            moving_cmd = abs(op.v) > cfg.stuck_v_cmd_min
            stalled = state.ground_speed < cfg.stuck_ground_speed_max
            if moving_cmd and stalled and state.t >= self.cooldown_until:
                if self.pending_since is None:
                    self.pending_since = state.t
                elif state.t - self.pending_since >= cfg.stuck_persistence:
                    self.stuck = True
                    self.entries += 1
                    return FlipperCommand(
                        targets=(FLIPPER_LIMIT,) * 4, rate=cfg.tracking_rate
                    )
            else:
                self.pending_since = None
        return self.inner.command(state, op, dt)


class SemiAfcPolicy(Policy):
    """Rear flippers on GCFC always; front pair on GCFC or OAFC per operator toggle."""

    name = "semi-afc"

    def __init__(self, config: PolicyConfig, geometry: RobotGeometry, hmap: HeightMap):
        self.config = config
        self.geometry = geometry
        self.normals = compute_normals(downsample(hmap, config.oafc_lowres_factor))
        self.reset()

    def reset(self):
        self.front_mode = "GCFC"
        self._toggle_held = False

    def command(self, state, op, dt):
        # edge-triggered toggle
        if op.front_mode_toggle and not self._toggle_held:
            self.front_mode = "OAFC" if self.front_mode == "GCFC" else "GCFC"
        self._toggle_held = op.front_mode_toggle

        cfg = self.config
        vmax = cfg.theta_dot_max
        rear = float(np.clip(gcfc_step(state.d, cfg.d_d, cfg.gcfc_gain), -vmax, vmax))
        if self.front_mode == "GCFC":
            front_l = front_r = rear
        else:
            front_l = self._track_front(state, "left", 0, dt)
            front_r = self._track_front(state, "right", 1, dt)
        return FlipperCommand(velocities=(front_l, front_r, rear, rear))

    def _track_front(self, state, side, idx, dt):
        tgt = oafc_target(self.normals, state, side, self.config, self.geometry)
        if tgt is None:
            return 0.0
        err = tgt - state.theta[idx]
        rate = self.config.tracking_rate
        return float(np.clip(err / dt, -rate, rate))


class HeuristicModePolicy(Policy):
    """Scripted stand-in for the discrete-mode classifier: picks a mode from
    the terrain height ahead of and under the robot."""

    name = "afc-discrete-scripted"

    def __init__(self, config: PolicyConfig, geometry: RobotGeometry, hmap: HeightMap):
        self.config = config
        self.geometry = geometry
        self.hmap = hmap
        self.mode = "DRIVE_FLAT"

    def reset(self):
        self.mode = "DRIVE_FLAT"

    def select_mode(self, state: RobotState) -> str:
        from .gridmap import sample_height

        g = self.geometry
        c, s = math.cos(state.yaw), math.sin(state.yaw)

        def ground(dist):
            px = state.x + c * dist
            py = state.y + s * dist
            if not self.hmap.contains(px, py):
                return 0.0
            return sample_height(self.hmap, px, py)

        here = ground(0.0)
        ahead = max(ground(d) for d in (0.5, 0.7, 0.9))
        behind = ground(-g.length / 2 - 0.2)
        rise = ahead - here
        drop = here - max(ground(g.length / 2 + 0.3), ground(g.length / 2 + 0.5))
        if rise > 0.20:
            return "CLIMB"
        if rise > 0.06:
            return "APPROACH_FRONT_UP"
        if drop > 0.06 and behind >= here - 0.02:
            return "DESCENT"
        if state.d < 0.5 * self.config.d_d:
            return "MAX_SUPPORT"
        return "DRIVE_FLAT"

    def command(self, state, op, dt):
        self.mode = self.select_mode(state)
        return FlipperCommand(
            targets=self.config.mode_targets(self.mode), rate=self.config.tracking_rate
        )


@dataclass
class ScriptedDriver:
    """Pure-pursuit style waypoint follower for headless heading/velocity control."""

    waypoints: list
    v_nom: float = 0.4
    k_heading: float = 1.5
    capture_radius: float = 0.2
    _index: int = 0

    def reset(self):
        self._index = 0

    @property
    def done(self) -> bool:
        return self._index >= len(self.waypoints)

    def drive(self, state: RobotState) -> tuple[float, float]:
        while not self.done:
            wx, wy = self.waypoints[self._index]
            if math.hypot(wx - state.x, wy - state.y) <= self.capture_radius:
                self._index += 1
                continue
            break
        if self.done:
            return 0.0, 0.0
        wx, wy = self.waypoints[self._index]
        heading_err = _wrap_angle(math.atan2(wy - state.y, wx - state.x) - state.yaw)
        v = self.v_nom * max(0.0, math.cos(heading_err))
        omega = self.k_heading * heading_err
        return v, omega


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def build_policy(
    name: str,
    config: PolicyConfig,
    geometry: RobotGeometry,
    hmap: HeightMap,
) -> Policy:
    """Policy registry keyed by CLI name."""
    if name == "mfc-continuous":
        return ManualContinuousPolicy(config)
    if name == "mfc-discrete":
        return DiscreteModePolicy(config)
    if name == "mfc-discrete-antistuck":
        return AntiStuckWrapper(DiscreteModePolicy(config), config)
    if name == "semi-afc":
        return SemiAfcPolicy(config, geometry, hmap)
    if name == "afc-discrete-antistuck-scripted":
        pol = AntiStuckWrapper(HeuristicModePolicy(config, geometry, hmap), config)
        pol.name = name  # registry name is authoritative in logs
        return pol
    raise ConfigError(
        f"unknown policy {name!r}; registered: {', '.join(POLICY_NAMES)}"
    )


POLICY_NAMES = (
    "mfc-continuous",
    "mfc-discrete",
    "mfc-discrete-antistuck",
    "semi-afc",
    "afc-discrete-antistuck-scripted",
)

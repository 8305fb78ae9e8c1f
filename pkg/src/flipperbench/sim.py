"""Quasi-static robot simulation over a heightmap.

Pose settling minimizes the body-origin height subject to non-penetration at
all contact samples, via an iteratively relinearized LP in (z, pitch, roll).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog

from .errors import ArgumentError, BoundsError, SettleError
from .geometry import FLIPPER_LIMIT, RobotGeometry
from .gridmap import HeightMap, sample_height

GRAVITY = 9.81
CONTACT_TOL = 0.005  # sample within 5 mm of terrain counts as contact
PENETRATION_TOL = 0.001
MAX_SETTLE_ITERS = 50
TRACTION_FRACTION = 0.25  # K_track as a fraction of track+flipper samples


@dataclass(frozen=True)
class ContactReport:
    in_contact: np.ndarray  # bool per support sample
    labels: np.ndarray  # 0 track, 1 flipper, 2 belly
    max_penetration: float

    @property
    def n_track(self) -> int:
        """Contacting track-family samples (main tracks + flippers)."""
        return int(np.count_nonzero(self.in_contact & (self.labels < 2)))

    @property
    def n_track_total(self) -> int:
        return int(np.count_nonzero(self.labels < 2))

    @property
    def belly_contact(self) -> bool:
        return bool(np.any(self.in_contact & (self.labels == 2)))


@dataclass(frozen=True)
class RobotState:
    t: float
    x: float
    y: float
    z: float
    yaw: float
    pitch: float
    roll: float
    theta: tuple[float, float, float, float]
    v_cmd: float = 0.0
    omega_cmd: float = 0.0
    ground_speed: float = 0.0
    d: float = 0.0
    accel: tuple[float, float, float] = (0.0, 0.0, GRAVITY)
    contact: ContactReport | None = None
    pos_hist: tuple | None = None  # ((x,y,z) at t-1, (x,y,z) at t-2)


def rotation(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Rz(yaw) @ Ry(pitch) @ Rx(roll); positive pitch drops the nose."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    return rz @ ry @ rx


def _terrain_under(hmap: HeightMap, wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    if not hmap.contains(wx, wy):
        raise BoundsError("robot footprint outside map bounds")
    return sample_height(hmap, wx, wy)


def settle_pose(
    hmap: HeightMap,
    x: float,
    y: float,
    yaw: float,
    theta,
    geometry: RobotGeometry,
    warm_pitch: float = 0.0,
    warm_roll: float = 0.0,
) -> tuple[float, float, float, ContactReport]:
    """Rest the robot on the terrain; returns (z, pitch, roll, contacts)."""
    pts, labels = geometry.support_points(theta)
    pitch, roll = warm_pitch, warm_roll
    z = 0.0
    for it in range(MAX_SETTLE_ITERS):
        # shrink the trust region once past the first iterations so the
        # relinearized LP cannot cycle between two support sets forever
        trust = 0.2 * (0.7 ** max(0, it - 8))
        rot = rotation(yaw, pitch, roll)
        world = pts @ rot.T
        wx = world[:, 0] + x
        wy = world[:, 1] + y
        zoff = world[:, 2]
        h = _terrain_under(hmap, wx, wy)
        cp, sp = math.cos(pitch), math.sin(pitch)
        cr, sr = math.cos(roll), math.sin(roll)
        tilt = sr * pts[:, 1] + cr * pts[:, 2]
        dz_dpitch = -cp * pts[:, 0] - sp * tilt
        dz_droll = cp * (cr * pts[:, 1] - sr * pts[:, 2])
        # minimize z subject to z + zoff + dz_dpitch*b + dz_droll*g >= h
        a_ub = np.column_stack([-np.ones(len(pts)), -dz_dpitch, -dz_droll])
        b_ub = zoff - h
        res = linprog(
            c=[1.0, 0.0, 0.0],
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=[(None, None), (-trust, trust), (-trust, trust)],
            method="highs",
        )
        if not res.success:  # pragma: no cover - LP is always feasible/bounded
            raise SettleError(f"settle LP failed: {res.message}")
        z, dpitch, droll = res.x
        pitch += dpitch
        roll += droll
        if max(abs(dpitch), abs(droll)) < 1e-6:
            break
    else:
        raise SettleError("pose settling did not converge")

    rot = rotation(yaw, pitch, roll)
    world = pts @ rot.T
    h = _terrain_under(hmap, world[:, 0] + x, world[:, 1] + y)
    z = float(np.max(h - world[:, 2]))
    gap = (z + world[:, 2]) - h
    if float(-np.min(gap)) > PENETRATION_TOL:  # pragma: no cover
        raise SettleError("settle left penetrating contacts")
    report = ContactReport(
        in_contact=gap <= CONTACT_TOL,
        labels=labels,
        max_penetration=float(max(0.0, -np.min(gap))),
    )
    return z, pitch, roll, report


def min_clearance(hmap: HeightMap, pose, geometry: RobotGeometry) -> float:
    """Minimum belly-sample height above terrain, floored at zero.

    pose is (x, y, z, yaw, pitch, roll).
    """
    x, y, z, yaw, pitch, roll = pose
    pts = geometry.belly_points()
    world = pts @ rotation(yaw, pitch, roll).T
    h = _terrain_under(hmap, world[:, 0] + x, world[:, 1] + y)
    return float(max(0.0, np.min(z + world[:, 2] - h)))


def traction(report: ContactReport) -> float:
    """Three-level traction factor from the current contact pattern."""
    k = max(1, int(math.ceil(TRACTION_FRACTION * report.n_track_total)))
    tracks_ok = report.n_track >= k
    if tracks_ok and not report.belly_contact:
        return 1.0
    if report.belly_contact and not tracks_ok:
        return 0.0
    return 0.5


def initial_state(
    hmap: HeightMap,
    geometry: RobotGeometry,
    x: float,
    y: float,
    yaw: float = 0.0,
    theta=(0.0, 0.0, 0.0, 0.0),
    t: float = 0.0,
) -> RobotState:
    z, pitch, roll, report = settle_pose(hmap, x, y, yaw, theta, geometry)
    d = min_clearance(hmap, (x, y, z, yaw, pitch, roll), geometry)
    rot = rotation(yaw, pitch, roll)
    accel = tuple(rot.T @ np.array([0.0, 0.0, GRAVITY]))
    return RobotState(
        t=t, x=x, y=y, z=z, yaw=yaw, pitch=pitch, roll=roll,
        theta=tuple(float(v) for v in theta), d=d, accel=accel,
        contact=report, pos_hist=((x, y, z), (x, y, z)),
    )


def step(
    state: RobotState,
    cmd: tuple[float, float, tuple[float, float, float, float]],
    dt: float,
    hmap: HeightMap,
    geometry: RobotGeometry,
) -> RobotState:
    """Advance one tick: actuate flippers, move with traction, settle, sense."""
    if not (0.0 < dt <= 0.1):
        raise ArgumentError("dt must be in (0, 0.1]")
    v, omega, theta_dot = cmd
    theta = tuple(
        float(np.clip(state.theta[i] + theta_dot[i] * dt, -FLIPPER_LIMIT, FLIPPER_LIMIT))
        for i in range(4)
    )
    tau = traction(state.contact) if state.contact is not None else 1.0
    x = state.x + tau * v * math.cos(state.yaw) * dt
    y = state.y + tau * v * math.sin(state.yaw) * dt
    yaw = state.yaw + tau * omega * dt
    z, pitch, roll, report = settle_pose(
        hmap, x, y, yaw, theta, geometry, state.pitch, state.roll
    )
    d = min_clearance(hmap, (x, y, z, yaw, pitch, roll), geometry)
    ground_speed = math.hypot(x - state.x, y - state.y) / dt

    p2 = np.array(state.pos_hist[0]) if state.pos_hist else np.array([state.x, state.y, state.z])
    p_now = np.array([x, y, z])
    p1 = np.array([state.x, state.y, state.z])
    a_world = (p_now - 2 * p1 + p2) / (dt * dt)
    rot = rotation(yaw, pitch, roll)
    accel = tuple(rot.T @ (a_world + np.array([0.0, 0.0, GRAVITY])))

    return RobotState(
        t=state.t + dt, x=x, y=y, z=z, yaw=yaw, pitch=pitch, roll=roll,
        theta=theta, v_cmd=v, omega_cmd=omega, ground_speed=ground_speed,
        d=d, accel=accel, contact=report,
        pos_hist=((state.x, state.y, state.z), tuple(p2)),
    )

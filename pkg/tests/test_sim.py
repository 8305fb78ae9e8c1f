"""Quasi-static settling, traction, and the tick step."""

import math

import numpy as np
import pytest

from flipperbench.errors import ArgumentError
from flipperbench.geometry import RobotGeometry
from flipperbench.gridmap import HeightMap
from flipperbench.sim import (
    CONTACT_TOL,
    GRAVITY,
    PENETRATION_TOL,
    ContactReport,
    initial_state,
    min_clearance,
    rotation,
    settle_pose,
    step,
    traction,
)

from conftest import make_flat, make_ramp


class TestSettle:
    def test_flat_ground_rests_on_tracks(self, flat, geometry):
        z, pitch, roll, report = settle_pose(flat, 3.0, 0.0, 0.0, (0, 0, 0, 0), geometry)
        assert z == pytest.approx(geometry.track_drop, abs=1e-9)
        assert pitch == pytest.approx(0.0, abs=1e-6)
        assert roll == pytest.approx(0.0, abs=1e-6)
        assert report.n_track >= 2 * geometry.track_samples  # both tracks down
        assert not report.belly_contact
        assert report.max_penetration <= PENETRATION_TOL

    def test_uphill_ramp_raises_nose(self, geometry):
        alpha = 30.0
        m = make_ramp(alpha, x_ramp=-2.0)
        z, pitch, roll, _ = settle_pose(m, 5.0, 0.0, 0.0, (0, 0, 0, 0), geometry)
        # positive pitch = nose down, so an uphill grade gives pitch = -alpha
        assert math.degrees(pitch) == pytest.approx(-alpha, abs=0.1)
        assert roll == pytest.approx(0.0, abs=1e-6)

    def test_front_flippers_down_lift_the_nose(self, flat, geometry):
        theta = (math.radians(30), math.radians(30), 0.0, 0.0)
        z, pitch, _, _ = settle_pose(flat, 3.0, 0.0, 0.0, theta, geometry)
        z0, _, _, _ = settle_pose(flat, 3.0, 0.0, 0.0, (0, 0, 0, 0), geometry)
        assert pitch < -math.radians(1)  # nose raised
        assert z > z0

    def test_raised_flippers_change_nothing_on_flat(self, flat, geometry):
        theta = (-math.radians(40), -math.radians(40), 0.0, 0.0)
        z, pitch, roll, _ = settle_pose(flat, 3.0, 0.0, 0.0, theta, geometry)
        assert z == pytest.approx(geometry.track_drop, abs=1e-9)
        assert pitch == pytest.approx(0.0, abs=1e-6)

    def test_no_penetration_on_rough_terrain(self, geometry):
        rng = np.random.default_rng(3)
        h = rng.uniform(0.0, 0.12, size=(81, 241))
        # smooth the noise so slopes stay physical at 5 cm resolution
        k = np.ones((5, 5)) / 25.0
        from scipy.signal import convolve2d
        h = convolve2d(h, k, mode="same", boundary="symm")
        m = HeightMap(0.05, (-2.0, -2.0), h)
        for x in np.linspace(0.0, 8.0, 9):
            z, pitch, roll, report = settle_pose(m, float(x), 0.0, 0.0, (0, 0, 0, 0), geometry)
            assert report.max_penetration <= PENETRATION_TOL
            assert report.in_contact.any()

    def test_brute_force_height_oracle(self, geometry):
        """The LP must not rest higher than an exhaustive (pitch, roll) scan."""
        m = make_ramp(20, x_ramp=1.0)
        pts, _ = geometry.support_points((0.0, 0.0, 0.0, 0.0))
        x, y, yaw = 1.2, 0.0, 0.0  # straddling the crease at the ramp foot
        z_lp, pitch_lp, roll_lp, _ = settle_pose(m, x, y, yaw, (0, 0, 0, 0), geometry)

        from flipperbench.gridmap import sample_height
        best = math.inf
        for pitch in np.linspace(-0.5, 0.5, 201):
            for roll in (0.0,):  # terrain is y-invariant
                world = pts @ rotation(yaw, pitch, roll).T
                h = sample_height(m, world[:, 0] + x, world[:, 1] + y)
                z = float(np.max(h - world[:, 2]))
                best = min(best, z)
        assert z_lp <= best + 1e-3

    def test_clearance_on_flat_equals_track_drop(self, flat, geometry):
        state = initial_state(flat, geometry, 3.0, 0.0)
        assert state.d == pytest.approx(geometry.track_drop, abs=1e-6)

    def test_flush_hull_geometry_rests_at_zero_clearance(self, flat):
        g = RobotGeometry(track_drop=0.0)
        state = initial_state(flat, g, 3.0, 0.0)
        assert state.d == pytest.approx(0.0, abs=1e-6)


class TestTraction:
    def _report(self, n_track_on, belly_on, n_track=44, n_belly=45):
        labels = np.concatenate([np.zeros(n_track, int), np.full(n_belly, 2)])
        contact = np.zeros(n_track + n_belly, bool)
        contact[:n_track_on] = True
        if belly_on:
            contact[n_track] = True
        return ContactReport(contact, labels, 0.0)

    def test_full_grip(self):
        assert traction(self._report(20, False)) == 1.0

    def test_high_centered(self):
        assert traction(self._report(2, True)) == 0.0

    def test_belly_drag_with_grip(self):
        assert traction(self._report(20, True)) == 0.5

    def test_sparse_contact_without_belly(self):
        assert traction(self._report(2, False)) == 0.5

    def test_threshold_is_quarter_of_samples(self):
        # 44 track-family samples -> K = 11
        assert traction(self._report(11, False)) == 1.0
        assert traction(self._report(10, False)) == 0.5


class TestStep:
    def test_rest_accelerometer_reads_gravity(self, flat, geometry):
        state = initial_state(flat, geometry, 3.0, 0.0)
        for _ in range(10):
            state = step(state, (0.0, 0.0, (0, 0, 0, 0)), 0.02, flat, geometry)
        assert state.accel == pytest.approx((0.0, 0.0, GRAVITY), abs=1e-9)
        assert state.ground_speed == 0.0

    def test_constant_drive_on_flat(self, flat, geometry):
        state = initial_state(flat, geometry, 0.0, 0.0)
        for _ in range(50):
            state = step(state, (0.5, 0.0, (0, 0, 0, 0)), 0.02, flat, geometry)
        assert state.x == pytest.approx(0.5, abs=1e-9)
        assert state.ground_speed == pytest.approx(0.5, abs=1e-9)
        assert state.d == pytest.approx(geometry.track_drop, abs=1e-6)

    def test_yaw_integrates_turn_rate(self, flat, geometry):
        state = initial_state(flat, geometry, 3.0, 0.0)
        for _ in range(25):
            state = step(state, (0.0, 0.4, (0, 0, 0, 0)), 0.02, flat, geometry)
        assert state.yaw == pytest.approx(0.2, abs=1e-9)

    def test_flipper_angles_clamp_at_limit(self, flat, geometry):
        state = initial_state(flat, geometry, 3.0, 0.0)
        for _ in range(200):
            state = step(state, (0.0, 0.0, (1.5, -1.5, 0, 0)), 0.02, flat, geometry)
        assert state.theta[0] == pytest.approx(math.pi / 2)
        assert state.theta[1] == pytest.approx(-math.pi / 2)

    def test_step_is_deterministic(self, geometry):
        m = make_ramp(15)

        def run():
            s = initial_state(m, geometry, 0.0, 0.0)
            out = []
            for i in range(60):
                s = step(s, (0.4, 0.01, (0.2, 0.2, -0.1, -0.1)), 0.02, m, geometry)
                out.append(repr((s.x, s.y, s.z, s.pitch, s.roll, s.d, s.accel)))
            return out

        assert run() == run()

    def test_dt_validation(self, flat, geometry):
        state = initial_state(flat, geometry, 3.0, 0.0)
        with pytest.raises(ArgumentError):
            step(state, (0.0, 0.0, (0, 0, 0, 0)), 0.0, flat, geometry)
        with pytest.raises(ArgumentError):
            step(state, (0.0, 0.0, (0, 0, 0, 0)), 0.5, flat, geometry)

    def test_min_clearance_hand_value(self, flat, geometry):
        d = min_clearance(flat, (3.0, 0.0, 0.1, 0.0, 0.0, 0.0), geometry)
        assert d == pytest.approx(0.1)
        # below ground floors at zero rather than going negative
        assert min_clearance(flat, (3.0, 0.0, -0.2, 0.0, 0.0, 0.0), geometry) == 0.0


class TestRotation:
    def test_pitch_sign_drops_the_nose(self):
        r = rotation(0.0, math.radians(10), 0.0)
        nose = r @ np.array([1.0, 0.0, 0.0])
        assert nose[2] < 0  # +x body point moves down under positive pitch

    def test_composition_order(self):
        yaw, pitch, roll = 0.3, -0.2, 0.1
        cy, sy = math.cos(yaw), math.sin(yaw)
        cp, sp = math.cos(pitch), math.sin(pitch)
        cr, sr = math.cos(roll), math.sin(roll)
        rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
        ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
        rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
        assert np.allclose(rotation(yaw, pitch, roll), rz @ ry @ rx)

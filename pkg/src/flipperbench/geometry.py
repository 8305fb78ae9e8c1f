"""Robot geometry: dimensions and contact/belly sample point layouts."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ValidationError

FLIPPER_ORDER = ("FL", "FR", "RL", "RR")
FLIPPER_LIMIT = math.pi / 2


@dataclass(frozen=True)
class RobotGeometry:
    """Body/flipper dimensions and sampling densities for contact resolution.

    Body frame: origin at the belly center, x forward, z up. The belly plane
    is z = 0; main track undersides run track_drop below it. With
    track_drop = belly_clearance the robot sits at its nominal clearance on
    flat ground; track_drop = 0 models a flush-bottom hull that must stand on
    its flippers to gain clearance.
    """

    length: float = 0.8
    width: float = 0.6
    height: float = 0.3
    belly_clearance: float = 0.08  # nominal clearance d_d on flat terrain
    flipper_length: float = 0.3
    track_width: float = 0.1
    track_drop: float | None = None  # defaults to belly_clearance
    track_samples: int = 12
    flipper_samples: int = 5
    belly_samples_x: int = 9
    belly_samples_y: int = 5

    def __post_init__(self):
        for name in ("length", "width", "height", "belly_clearance", "flipper_length"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.track_drop is None:
            object.__setattr__(self, "track_drop", self.belly_clearance)
        if self.track_drop < 0:
            raise ValidationError("track_drop must be nonnegative")

    @property
    def d_d(self) -> float:
        return self.belly_clearance

    @property
    def track_y(self) -> float:
        """Lateral offset of each track centerline."""
        return self.width / 2 - self.track_width / 2

    def flipper_pivots(self) -> np.ndarray:
        """Pivot points in body frame, order FL, FR, RL, RR."""
        hx = self.length / 2
        ty = self.track_y
        z = -self.track_drop
        return np.array([
            [hx, ty, z],
            [hx, -ty, z],
            [-hx, ty, z],
            [-hx, -ty, z],
        ])

    def track_points(self) -> np.ndarray:
        """Contact samples along both main track undersides."""
        xs = np.linspace(-self.length / 2, self.length / 2, self.track_samples)
        z = -self.track_drop
        pts = []
        for sy in (self.track_y, -self.track_y):
            for x in xs:
                pts.append((x, sy, z))
        return np.array(pts)

    def flipper_points(self, theta) -> np.ndarray:
        """Contact samples along all four flipper undersides at angles theta.

        Positive angle rotates the tip downward. Front flippers extend +x,
        rear flippers -x.
        """
        theta = np.asarray(theta, dtype=float)
        pivots = self.flipper_pivots()
        fr = np.linspace(0.0, 1.0, self.flipper_samples)
        pts = []
        for i, (px, py, pz) in enumerate(pivots):
            direction = 1.0 if i < 2 else -1.0
            c, s = math.cos(theta[i]), math.sin(theta[i])
            for f in fr:
                r = f * self.flipper_length
                pts.append((px + direction * r * c, py, pz - r * s))
        return np.array(pts)

    def belly_points(self) -> np.ndarray:
        """Sample grid over the belly plane between the tracks."""
        bw = self.width - 2 * self.track_width
        xs = np.linspace(-self.length / 2, self.length / 2, self.belly_samples_x)
        ys = np.linspace(-bw / 2, bw / 2, self.belly_samples_y)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])

    def support_points(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """All contact-relevant samples and a label array.

        Labels: 0 = main track, 1 = flipper, 2 = belly.
        """
        tr = self.track_points()
        fl = self.flipper_points(theta)
        be = self.belly_points()
        pts = np.vstack([tr, fl, be])
        labels = np.concatenate([
            np.zeros(len(tr), dtype=int),
            np.ones(len(fl), dtype=int),
            np.full(len(be), 2, dtype=int),
        ])
        return pts, labels

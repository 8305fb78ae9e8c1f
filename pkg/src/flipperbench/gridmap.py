"""Heightmap grid: sampling, normals, downsampling, arena construction."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, BoundsError, ValidationError

OBSTACLE_KINDS = (
    "pallet-stack",
    "rotated-pallet",
    "up-down-staircase",
    "tilted-buried-pallet",
    "a-ramp",
    "u-ramp",
    "flipper-switch-gap",
)

# Euro pallet, standard dimensions (config constants, see default config).
PALLET_LENGTH = 1.2
PALLET_WIDTH = 0.8
PALLET_HEIGHT = 0.144


@dataclass(frozen=True)
class HeightMap:
    """Regular grid of terrain elevations, nodes at origin + index * resolution."""

    resolution: float
    origin: tuple[float, float]
    heights: np.ndarray  # shape (n_rows, n_cols), row = y index, col = x index

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        object.__setattr__(self, "heights", h)
        if self.resolution <= 0:
            raise ValidationError("resolution must be positive")
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ValidationError("heightmap needs at least 2x2 cells")
        if not np.isfinite(h).all():
            raise ValidationError("heights must be finite")
        h.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.heights.shape[0]

    @property
    def n_cols(self) -> int:
        return self.heights.shape[1]

    @property
    def x_max(self) -> float:
        return self.origin[0] + (self.n_cols - 1) * self.resolution

    @property
    def y_max(self) -> float:
        return self.origin[1] + (self.n_rows - 1) * self.resolution

    def contains(self, x, y) -> bool:
        return bool(
            np.all(x >= self.origin[0])
            and np.all(x <= self.x_max)
            and np.all(y >= self.origin[1])
            and np.all(y <= self.y_max)
        )

    def to_csv(self, path) -> None:
        """Export the grid for inspection: header row then raw elevation rows."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["resolution", self.resolution, "x0", self.origin[0], "y0", self.origin[1]])
            for row in self.heights:
                w.writerow([repr(v) for v in row])


@dataclass(frozen=True)
class SurfaceNormalMap:
    """Per-cell unit normals on the same grid geometry as the source map."""

    resolution: float
    origin: tuple[float, float]
    normals: np.ndarray  # shape (n_rows, n_cols, 3)

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=float)
        object.__setattr__(self, "normals", n)
        norms = np.linalg.norm(n, axis=2)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValidationError("normals must be unit length")
        if not (n[:, :, 2] > 0).all():
            raise ValidationError("normals must face upward")
        n.setflags(write=False)


def sample_height(hmap: HeightMap, x: float, y: float) -> float:
    """Bilinear interpolation of the four surrounding grid nodes."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if not hmap.contains(xa, ya):
        raise BoundsError(f"query ({x}, {y}) outside map")
    fx = (xa - hmap.origin[0]) / hmap.resolution
    fy = (ya - hmap.origin[1]) / hmap.resolution
    j0 = np.clip(np.floor(fx).astype(int), 0, hmap.n_cols - 2)
    i0 = np.clip(np.floor(fy).astype(int), 0, hmap.n_rows - 2)
    tx = fx - j0
    ty = fy - i0
    h = hmap.heights
    v = (
        h[i0, j0] * (1 - tx) * (1 - ty)
        + h[i0, j0 + 1] * tx * (1 - ty)
        + h[i0 + 1, j0] * (1 - tx) * ty
        + h[i0 + 1, j0 + 1] * tx * ty
    )
    return float(v) if np.isscalar(x) or xa.ndim == 0 else v


def compute_normals(hmap: HeightMap) -> SurfaceNormalMap:
    """Unit normals from height gradients: central differences, one-sided at borders."""
    dhdy, dhdx = np.gradient(hmap.heights, hmap.resolution)
    n = np.stack([-dhdx, -dhdy, np.ones_like(dhdx)], axis=2)
    n /= np.linalg.norm(n, axis=2, keepdims=True)
    return SurfaceNormalMap(hmap.resolution, hmap.origin, n)


def downsample(hmap: HeightMap, factor: int) -> HeightMap:
    """Block-mean reduction; partial border blocks average the cells available."""
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ArgumentError("downsample factor must be a positive integer")
    if factor == 1:
        return hmap
    h = hmap.heights
    row_idx = np.arange(0, h.shape[0], factor)
    col_idx = np.arange(0, h.shape[1], factor)
    sums = np.add.reduceat(np.add.reduceat(h, row_idx, axis=0), col_idx, axis=1)
    rows_per = np.minimum(factor, h.shape[0] - row_idx)
    cols_per = np.minimum(factor, h.shape[1] - col_idx)
    counts = rows_per[:, None] * cols_per[None, :]
    out = sums / counts
    if out.shape[0] < 2 or out.shape[1] < 2:
        raise ArgumentError("downsample factor too large for map size")
    return HeightMap(hmap.resolution * factor, hmap.origin, out)


@dataclass(frozen=True)
class Obstacle:
    """One arena obstacle: a kind, a pose on the ground plane, and dimensions."""

    kind: str
    x: float
    y: float
    yaw: float = 0.0
    length: float = PALLET_LENGTH
    width: float = PALLET_WIDTH
    height: float = PALLET_HEIGHT
    stack: int = 1
    steps: int = 3
    mid_height: float = 0.05

    def __post_init__(self):
        if self.kind not in OBSTACLE_KINDS:
            raise ValidationError(f"unknown obstacle kind {self.kind!r}")

    def profile(self, lx: np.ndarray, ly: np.ndarray) -> np.ndarray:
        """Elevation at local footprint coordinates, zero outside the footprint.

        Local frame: origin at obstacle center, x along length, y along width.
        """
        half_l = self.length / 2.0
        half_w = self.width / 2.0
        inside = (np.abs(lx) <= half_l) & (np.abs(ly) <= half_w)
        u = lx + half_l  # 0 .. length along the obstacle
        kind = self.kind
        if kind in ("pallet-stack", "rotated-pallet"):
            z = np.full_like(lx, self.height * self.stack)
        elif kind == "tilted-buried-pallet":
            z = self.height * self.stack * (u / self.length)
        elif kind == "up-down-staircase":
            n = self.steps
            tread = self.length / (2 * n)
            k = np.minimum(np.floor(u / tread), 2 * n - 1)
            level = np.where(k < n, k + 1, 2 * n - k)
            z = level * self.height
        elif kind == "a-ramp":
            z = self.height * (1.0 - np.abs(lx) / half_l)
        elif kind == "u-ramp":
            ramp = min(0.4, self.length / 4.0)
            up = np.clip(u / ramp, 0.0, 1.0) * self.height
            down = np.clip((self.length - u) / ramp, 0.0, 1.0) * self.height
            wall = np.minimum(up, down)
            dip_span = half_l - ramp
            dip = self.height - (self.height - self.mid_height) * np.clip(
                1.0 - np.abs(lx) / max(dip_span, 1e-9), 0.0, 1.0
            )
            z = np.minimum(wall, dip)
        elif kind == "flipper-switch-gap":
            gap = max(self.mid_height, 0.02)
            third = self.length / 3.0
            on_pallet = (u <= third) | (u >= 2 * third)
            z = np.where(on_pallet, self.height * self.stack, gap)
        else:  # pragma: no cover - guarded by __post_init__
            raise ValidationError(f"unknown obstacle kind {kind!r}")
        return np.where(inside, z, 0.0)


@dataclass(frozen=True)
class ArenaSpec:
    """Declarative arena: obstacles plus scoring sectors along the traversal line."""

    obstacles: tuple[Obstacle, ...]
    sectors: tuple[tuple[float, float], ...]
    resolution: float = 0.05
    x_min: float = -2.0
    x_max: float = 56.0
    y_min: float = -1.5
    y_max: float = 1.5
    track_y: float = 0.0  # traversal line is y = track_y, arc length = x - x_min

    def __post_init__(self):
        for s0, s1 in self.sectors:
            if not (3.0 <= s1 - s0 <= 9.0):
                raise ValidationError(f"sector [{s0}, {s1}] length outside [3, 9] m")


def build_arena(spec: ArenaSpec) -> HeightMap:
    """Compose flat ground with every obstacle footprint via pointwise max."""
    res = spec.resolution
    n_cols = int(round((spec.x_max - spec.x_min) / res)) + 1
    n_rows = int(round((spec.y_max - spec.y_min) / res)) + 1
    heights = np.zeros((n_rows, n_cols))
    xs = spec.x_min + np.arange(n_cols) * res
    ys = spec.y_min + np.arange(n_rows) * res
    gx, gy = np.meshgrid(xs, ys)
    for ob in spec.obstacles:
        c, s = math.cos(ob.yaw), math.sin(ob.yaw)
        hx = abs(c) * ob.length / 2 + abs(s) * ob.width / 2
        hy = abs(s) * ob.length / 2 + abs(c) * ob.width / 2
        if not (
            spec.x_min <= ob.x - hx and ob.x + hx <= spec.x_max
            and spec.y_min <= ob.y - hy and ob.y + hy <= spec.y_max
        ):
            raise BoundsError(f"obstacle {ob.kind} at ({ob.x}, {ob.y}) outside map bounds")
        dx = gx - ob.x
        dy = gy - ob.y
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        np.maximum(heights, ob.profile(lx, ly), out=heights)
    return HeightMap(res, (spec.x_min, spec.y_min), heights)


def default_arena_spec(resolution: float = 0.05) -> ArenaSpec:
    """The stock 13-obstacle corridor: one obstacle per 4 m sector."""
    def cx(i):  # obstacle i in 1..13 sits at the middle of its sector
        return 4.0 * i

    p = PALLET_HEIGHT
    obstacles = (
        Obstacle("pallet-stack", cx(1), 0.0, 0.0, width=2.4),
        Obstacle("rotated-pallet", cx(2), 0.0, math.radians(25), width=2.4),
        Obstacle("flipper-switch-gap", cx(3), 0.0, 0.0, length=2.4, width=2.4),
        Obstacle("up-down-staircase", cx(4), 0.0, 0.0, length=3.0, width=2.4, height=0.09, steps=3),
        Obstacle("pallet-stack", cx(5), 0.0, 0.0, length=2.4, width=2.4, stack=2),
        Obstacle("tilted-buried-pallet", cx(6), 0.3, 0.0, width=1.2),
        Obstacle("rotated-pallet", cx(7), 0.0, math.radians(-20), width=2.0),
        # centre ridge narrower than the track gap: the belly grounds on it
        # while the tracks hang in the air, so only a full flipper stand
        # (near-vertical flippers) can lift the hull clear
        Obstacle("pallet-stack", cx(8), 0.0, 0.0, length=0.6, width=0.34, height=0.28),
        Obstacle("rotated-pallet", cx(9), 0.0, math.radians(30), width=2.0),
        Obstacle("tilted-buried-pallet", cx(10), 0.2, math.radians(-12), width=1.2),
        Obstacle("pallet-stack", cx(11), 0.0, 0.0, length=0.8, width=2.4, height=0.1),
        Obstacle("a-ramp", cx(12), 0.0, 0.0, length=2.4, width=2.4, height=0.22),
        Obstacle("u-ramp", cx(13), 0.0, 0.0, length=3.0, width=2.4, height=0.2),
    )
    sectors = tuple((4.0 * i - 2.0, 4.0 * i + 2.0) for i in range(1, 14))
    return ArenaSpec(obstacles=obstacles, sectors=sectors, resolution=resolution)


def count_raised_regions(hmap: HeightMap, threshold: float = 1e-9) -> int:
    """Count 4-connected components of {h > threshold} (test oracle helper)."""
    from scipy import ndimage

    labeled, n = ndimage.label(hmap.heights > threshold)
    return int(n)

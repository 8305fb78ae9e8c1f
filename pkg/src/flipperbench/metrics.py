"""Scoring pipeline: normalization, cognitive load, shock/clearance windows,
sector slicing, traversal quality, penalties, calibration, aggregation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CalibrationError, ConfigError, ScoringError, ValidationError
from .logstore import AXIS_DEADZONE, CommandFrame, EpisodeLog

N_WINDOWS = 10


def sigmoid_norm(x: float, x_hat: float) -> float:
    """Decreasing sigmoid normalization: 1 at x=0, ~0.538 at x=x_hat, ->0."""
    if x_hat <= 0:
        raise ArgumentError("reference value must be positive")
    if x < 0:
        raise ArgumentError("x must be nonnegative")
    u = x / x_hat
    # algebraically 2 - 2/(1 + e^-u); this form keeps strict monotonicity
    # in floating point far past the point where 1 + e^-u rounds to 1
    return 2.0 / (math.exp(u) + 1.0) if u < 700.0 else 2.0 * math.exp(-u)


def linear_norm(x: float, x_min: float) -> float:
    """Linear normalization clamped to [0, 1]: 0 at x<=0, 1 from x=x_min up."""
    if x_min <= 0:
        raise ArgumentError("reference value must be positive")
    return min(1.0, max(x / x_min, 0.0))


def shock(a) -> float:
    """Acceleration magnitude."""
    ax, ay, az = a
    return math.sqrt(ax * ax + ay * ay + az * az)


def cognitive_load(
    frames,
    t_prev: float | None = None,
    deadzone: float = AXIS_DEADZONE,
) -> float:
    """Time integral of the simultaneously-active channel count.

    Each frame contributes pressed_count * (t_i - t_{i-1}); the first frame
    uses t_prev when given, otherwise contributes nothing.
    """
    cl = 0.0
    last = t_prev
    for f in frames:
        if last is not None:
            if f.t <= last:
                raise ValidationError("frame timestamps must be strictly increasing")
            cl += f.pressed_count(deadzone) * (f.t - last)
        last = f.t
    return cl


def normalize_cl(cl: float, cl_min: float) -> float:
    """Raw sigmoid normalization of cognitive load (decreasing in load)."""
    return sigmoid_norm(cl, cl_min)


def window_reduce(samples, interval, reducer: str, n_windows: int = N_WINDOWS):
    """Partition samples by arc length into equal windows and reduce each.

    samples: sequence of (arc_length, value); reducer: 'max' or 'min'.
    """
    s0, s1 = interval
    if s1 <= s0:
        raise ArgumentError("empty sector interval")
    if reducer not in ("max", "min"):
        raise ArgumentError("reducer must be 'max' or 'min'")
    width = (s1 - s0) / n_windows
    bins: list[list[float]] = [[] for _ in range(n_windows)]
    for s, v in samples:
        if not (s0 <= s < s1):
            raise ScoringError(f"sample at arc {s} outside sector [{s0}, {s1})")
        idx = min(int((s - s0) / width), n_windows - 1)
        bins[idx].append(v)
    fn = max if reducer == "max" else min
    out = []
    for i, b in enumerate(bins):
        if not b:
            raise ScoringError(f"window {i + 1} of {n_windows} has no samples")
        out.append(fn(b))
    return out


@dataclass(frozen=True)
class ObstacleSector:
    """Along-track interval assigned to one obstacle, scored in equal windows."""

    id: int
    s_start: float
    s_end: float
    n_windows: int = N_WINDOWS

    def __post_init__(self):
        if not (3.0 <= self.s_end - self.s_start <= 9.0):
            raise ValidationError(f"sector {self.id} length outside [3, 9] m")

    @property
    def interval(self):
        return (self.s_start, self.s_end)


@dataclass
class SectorGroup:
    """Samples from one log falling inside one sector."""

    sector: ObstacleSector
    arc: list = field(default_factory=list)
    shock: list = field(default_factory=list)
    clearance: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    traversed: bool = False


@dataclass(frozen=True)
class QualityLoadPoint:
    method: str
    obstacle: int
    cl_n: float
    tq_n: float
    s_n: float
    d_n: float
    traversed: bool
    cl_raw: float = 0.0
    cl_sigmoid: float = 0.0  # Eq-as-printed value, decreasing in load


@dataclass
class CalibrationTable:
    cl_min: dict  # sector id -> seconds
    s_max: float  # global maximal windowed shock
    d_d: float
    s_max_per_sector: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s_max <= 0 or self.d_d <= 0:
            raise ValidationError("s_max and d_d must be positive")
        for sid, v in self.cl_min.items():
            if v <= 0:
                raise ValidationError(f"CL_min for sector {sid} must be positive")

    def s_max_for(self, sector_id: int) -> float:
        return self.s_max_per_sector.get(sector_id, self.s_max)

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump({
                "cl_min": {str(k): v for k, v in sorted(self.cl_min.items())},
                "s_max": self.s_max,
                "d_d": self.d_d,
                "s_max_per_sector": {str(k): v for k, v in sorted(self.s_max_per_sector.items())},
            }, f, indent=2, sort_keys=True)
            f.write("\n")

    @staticmethod
    def from_json(path) -> "CalibrationTable":
        with open(path) as f:
            d = json.load(f)
        return CalibrationTable(
            cl_min={int(k): v for k, v in d["cl_min"].items()},
            s_max=d["s_max"], d_d=d["d_d"],
            s_max_per_sector={int(k): v for k, v in d.get("s_max_per_sector", {}).items()},
        )


def sector_slices(log: EpisodeLog, sectors) -> dict:
    """Assign log ticks and command frames to sectors by arc length (x).

    Half-open intervals [start, end); a sector is traversed once the robot
    crosses its end boundary. Returns {sector id: SectorGroup}.
    """
    groups = {sec.id: SectorGroup(sector=sec) for sec in sectors}
    max_arc = -math.inf
    spans = {}  # sector id -> [t_first, t_last]
    for tk in log.ticks:
        arc = tk.x
        max_arc = max(max_arc, arc)
        for sec in sectors:
            if sec.s_start <= arc < sec.s_end:
                g = groups[sec.id]
                g.arc.append(arc)
                g.shock.append(shock(tk.accel))
                g.clearance.append(tk.d)
                span = spans.setdefault(sec.id, [tk.t, tk.t])
                span[1] = tk.t
                break
    for frame in log.command_stream():
        for sid, (t0, t1) in spans.items():
            if t0 <= frame.t <= t1:
                groups[sid].frames.append(frame)
                break
    for sec in sectors:
        groups[sec.id].traversed = max_arc >= sec.s_end
    return groups


def score_sector(
    group: SectorGroup,
    calib: CalibrationTable,
    method: str,
    literal_windows: bool = False,
) -> QualityLoadPoint:
    """One Quality-Load point; failures are pinned to (CL_n=1, TQ_n=0)."""
    sec = group.sector
    if not group.traversed:
        return QualityLoadPoint(
            method=method, obstacle=sec.id, cl_n=1.0, tq_n=0.0, s_n=0.0, d_n=0.0,
            traversed=False,
        )
    if sec.id not in calib.cl_min:
        raise ConfigError(f"no calibration entry for sector {sec.id}")
    s_max = calib.s_max_for(sec.id)
    shock_w = window_reduce(zip(group.arc, group.shock), sec.interval, "max", sec.n_windows)
    clear_reducer = "max" if literal_windows else "min"
    clear_w = window_reduce(zip(group.arc, group.clearance), sec.interval, clear_reducer, sec.n_windows)
    s_n = float(np.mean([sigmoid_norm(v, s_max / 2.0) for v in shock_w]))
    d_n = float(np.mean([linear_norm(v, calib.d_d) for v in clear_w]))
    tq_n = (s_n + d_n) / 2.0
    cl_raw = cognitive_load(group.frames)
    cl_sig = sigmoid_norm(cl_raw, calib.cl_min[sec.id])
    return QualityLoadPoint(
        method=method, obstacle=sec.id, cl_n=1.0 - cl_sig, tq_n=tq_n,
        s_n=s_n, d_n=d_n, traversed=True, cl_raw=cl_raw, cl_sigmoid=cl_sig,
    )


def score_log(
    log: EpisodeLog,
    sectors,
    calib: CalibrationTable,
    literal_windows: bool = False,
) -> list:
    groups = sector_slices(log, sectors)
    return [
        score_sector(groups[sec.id], calib, log.header.method, literal_windows)
        for sec in sectors
    ]


@dataclass(frozen=True)
class MethodMeans:
    method: str
    cl_n: float
    tq_n: float
    s_n: float
    d_n: float
    traversed: tuple  # per-obstacle flags in obstacle order


def aggregate(points) -> list:
    """Per-method arithmetic means over all obstacles, penalties included."""
    by_method: dict[str, dict[int, QualityLoadPoint]] = {}
    obstacles = sorted({p.obstacle for p in points})
    for p in points:
        slot = by_method.setdefault(p.method, {})
        if p.obstacle in slot:
            raise ValidationError(f"duplicate point for ({p.method}, {p.obstacle})")
        slot[p.obstacle] = p
    out = []
    for method in sorted(by_method):
        pts = by_method[method]
        missing = [o for o in obstacles if o not in pts]
        if missing:
            raise ValidationError(f"method {method} missing obstacles {missing}")
        ordered = [pts[o] for o in obstacles]
        out.append(MethodMeans(
            method=method,
            cl_n=float(np.mean([p.cl_n for p in ordered])),
            tq_n=float(np.mean([p.tq_n for p in ordered])),
            s_n=float(np.mean([p.s_n for p in ordered])),
            d_n=float(np.mean([p.d_n for p in ordered])),
            traversed=tuple(p.traversed for p in ordered),
        ))
    return out


def calibrate(logs, sectors, d_d: float) -> CalibrationTable:
    """CL_min per sector over traversing logs; global s_max over window maxima."""
    cl_min: dict[int, float] = {}
    s_max = 0.0
    for log in logs:
        groups = sector_slices(log, sectors)
        for sec in sectors:
            g = groups[sec.id]
            if not g.traversed:
                continue
            cl = cognitive_load(g.frames)
            if sec.id not in cl_min or cl < cl_min[sec.id]:
                cl_min[sec.id] = cl
            if g.shock:
                windows = window_reduce(
                    zip(g.arc, g.shock), sec.interval, "max", sec.n_windows
                )
                s_max = max(s_max, max(windows))
    uncovered = [sec.id for sec in sectors if sec.id not in cl_min]
    if uncovered:
        raise CalibrationError(f"no traversing log for sectors {uncovered}")
    return CalibrationTable(cl_min=cl_min, s_max=s_max, d_d=d_d)

"""Durable episode logs: JSONL schema, validation, and external CSV import."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict

from .errors import AlignmentError, ParseError, ValidationError

SCHEMA_VERSION = "1.0"
STATUSES = ("completed", "failed", "aborted")
AXIS_DEADZONE = 0.1


@dataclass(frozen=True)
class CommandFrame:
    """One timestamped operator input sample."""

    t: float
    buttons: tuple
    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "buttons", tuple(int(b) for b in self.buttons))
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))
        if any(b not in (0, 1) for b in self.buttons):
            raise ValidationError("buttons must be 0/1")
        if any(abs(a) > 1.0 for a in self.axes):
            raise ValidationError("axes must lie in [-1, 1]")

    @property
    def m(self) -> int:
        return len(self.buttons) + len(self.axes)

    def pressed_count(self, deadzone: float = AXIS_DEADZONE) -> int:
        """Number of active channels: pressed buttons plus deflected axes."""
        return sum(self.buttons) + sum(1 for a in self.axes if abs(a) > deadzone)

    @staticmethod
    def zero(t: float, n_buttons: int, n_axes: int) -> "CommandFrame":
        return CommandFrame(t, (0,) * n_buttons, (0.0,) * n_axes)


@dataclass(frozen=True)
class TickRecord:
    t: float
    x: float
    y: float
    z: float
    yaw: float
    pitch: float
    roll: float
    theta: tuple
    v_cmd: float
    omega_cmd: float
    ground_speed: float
    d: float
    accel: tuple
    frame: CommandFrame


@dataclass(frozen=True)
class LogHeader:
    method: str
    arena_id: str
    arena_hash: str
    geometry_hash: str
    dt: float
    seed: int = 0
    schema_version: str = SCHEMA_VERSION
    start_time: str = ""


@dataclass(frozen=True)
class LogFooter:
    status: str
    reason: str = ""
    wall_time: float = 0.0

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValidationError(f"status must be one of {STATUSES}")


@dataclass
class EpisodeLog:
    header: LogHeader
    ticks: list = field(default_factory=list)
    footer: LogFooter | None = None
    # Commands at their received timestamps (teleop bridge); empty for native
    # sim runs, where the per-tick frames are the command stream.
    frames: list = field(default_factory=list)

    def validate(self) -> None:
        if self.footer is None:
            raise ValidationError("log has no footer")
        for seq, what in ((self.ticks, "tick"), (self.frames, "cmd")):
            last_t = None
            m = None
            for i, rec in enumerate(seq):
                f = rec.frame if what == "tick" else rec
                t = rec.t
                if last_t is not None and t <= last_t:
                    raise ValidationError(f"{what} {i}: timestamp not increasing")
                last_t = t
                if m is None:
                    m = f.m
                elif f.m != m:
                    raise ValidationError(f"{what} {i}: button/axis count changed")

    def command_stream(self) -> list:
        """Authoritative operator command sequence for cognitive-load scoring."""
        if self.frames:
            return list(self.frames)
        return [tk.frame for tk in self.ticks]


def _frame_dict(f: CommandFrame) -> dict:
    return {"t": f.t, "buttons": list(f.buttons), "axes": list(f.axes)}


def _frame_from(d: dict) -> CommandFrame:
    return CommandFrame(d["t"], tuple(d["buttons"]), tuple(d["axes"]))


def write_log(log: EpisodeLog, sink) -> None:
    """Serialize as JSONL: header line, tick/cmd lines in time order, footer."""
    log.validate()
    lines = []
    head = {"kind": "header", **asdict(log.header)}
    lines.append(head)
    events = [("tick", tk.t, tk) for tk in log.ticks] + [
        ("cmd", fr.t, fr) for fr in log.frames
    ]
    events.sort(key=lambda e: (e[1], 0 if e[0] == "cmd" else 1))
    for kind, _, rec in events:
        if kind == "tick":
            d = asdict(rec)
            d["frame"] = _frame_dict(rec.frame)
            d["theta"] = list(rec.theta)
            d["accel"] = list(rec.accel)
            lines.append({"kind": "tick", **d})
        else:
            lines.append({"kind": "cmd", **_frame_dict(rec)})
    lines.append({"kind": "footer", **asdict(log.footer)})
    for obj in lines:
        sink.write(json.dumps(obj, sort_keys=True) + "\n")


def write_log_path(log: EpisodeLog, path) -> None:
    with open(path, "w") as f:
        write_log(log, f)


def read_log(source) -> EpisodeLog:
    """Parse and validate a JSONL log; unknown fields are ignored."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as f:
            return read_log(f)
    header = None
    footer = None
    ticks = []
    frames = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"line {lineno}: malformed JSON ({e})") from e
        kind = obj.get("kind")
        if kind == "header":
            if lineno != 1:
                raise ParseError(f"line {lineno}: header not first")
            version = obj.get("schema_version", "")
            if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
                raise ParseError(
                    f"line {lineno}: schema version {version!r} incompatible "
                    f"with {SCHEMA_VERSION}"
                )
            header = LogHeader(
                method=obj["method"], arena_id=obj["arena_id"],
                arena_hash=obj["arena_hash"], geometry_hash=obj["geometry_hash"],
                dt=obj["dt"], seed=obj.get("seed", 0),
                schema_version=version, start_time=obj.get("start_time", ""),
            )
        elif kind == "tick":
            try:
                ticks.append(TickRecord(
                    t=obj["t"], x=obj["x"], y=obj["y"], z=obj["z"],
                    yaw=obj["yaw"], pitch=obj["pitch"], roll=obj["roll"],
                    theta=tuple(obj["theta"]), v_cmd=obj["v_cmd"],
                    omega_cmd=obj["omega_cmd"], ground_speed=obj["ground_speed"],
                    d=obj["d"], accel=tuple(obj["accel"]),
                    frame=_frame_from(obj["frame"]),
                ))
            except (KeyError, ValidationError) as e:
                raise ValidationError(f"line {lineno} (tick {len(ticks)}): {e}") from e
        elif kind == "cmd":
            frames.append(_frame_from(obj))
        elif kind == "footer":
            footer = LogFooter(
                status=obj["status"], reason=obj.get("reason", ""),
                wall_time=obj.get("wall_time", 0.0),
            )
        else:
            raise ParseError(f"line {lineno}: unknown record kind {kind!r}")
    if header is None:
        raise ParseError("missing header")
    if footer is None:
        raise ParseError("truncated log: missing footer")
    log = EpisodeLog(header=header, ticks=ticks, footer=footer, frames=frames)
    try:
        log.validate()
    except ValidationError as e:
        raise ValidationError(str(e)) from e
    return log


def log_to_bytes(log: EpisodeLog) -> bytes:
    buf = io.StringIO()
    write_log(log, buf)
    return buf.getvalue().encode()


def import_external(
    commands_csv,
    trajectory_csv,
    mapping_config: dict,
) -> EpisodeLog:
    """Build a scoreable log from externally recorded CSV streams.

    mapping_config names the columns:
      time, buttons (list), axes (list) for the command stream;
      time, pose {x,y,z,yaw,pitch,roll}, accel (list of 3), clearance,
      ground_speed (optional) for the trajectory stream;
      plus method/arena_id/status metadata.
    Each command frame is attached to the nearest subsequent trajectory tick.
    """
    cmd_rows = _read_csv(commands_csv)
    traj_rows = _read_csv(trajectory_csv)
    if not traj_rows:
        raise ParseError("trajectory CSV has no rows")
    tcol_c = mapping_config.get("command_time", "t")
    tcol_t = mapping_config.get("trajectory_time", "t")
    btn_cols = mapping_config.get("buttons", [])
    axis_cols = mapping_config.get("axes", [])
    pose = mapping_config.get("pose", {})
    accel_cols = mapping_config.get("accel", ["ax", "ay", "az"])
    d_col = mapping_config.get("clearance", "d")
    gs_col = mapping_config.get("ground_speed")

    frames = [
        CommandFrame(
            float(r[tcol_c]),
            tuple(int(float(r[c])) for c in btn_cols),
            tuple(float(r[c]) for c in axis_cols),
        )
        for r in cmd_rows
    ]
    frames.sort(key=lambda f: f.t)
    traj_t = [float(r[tcol_t]) for r in traj_rows]
    if frames:
        if frames[0].t > traj_t[-1] or frames[-1].t < traj_t[0]:
            raise AlignmentError("command and trajectory streams do not overlap in time")

    dt = (traj_t[-1] - traj_t[0]) / max(1, len(traj_t) - 1)
    n_b, n_a = len(btn_cols), len(axis_cols)
    ticks = []
    fi = 0
    latest = CommandFrame.zero(traj_t[0], n_b, n_a)
    for r, t in zip(traj_rows, traj_t):
        while fi < len(frames) and frames[fi].t <= t:
            latest = frames[fi]
            fi += 1
        def col(name, default=0.0):
            key = pose.get(name, name)
            return float(r.get(key, default))
        ticks.append(TickRecord(
            t=t, x=col("x"), y=col("y"), z=col("z"),
            yaw=col("yaw"), pitch=col("pitch"), roll=col("roll"),
            theta=tuple(float(r.get(k, 0.0)) for k in ("theta_fl", "theta_fr", "theta_rl", "theta_rr")),
            v_cmd=float(r.get("v_cmd", 0.0)), omega_cmd=float(r.get("omega_cmd", 0.0)),
            ground_speed=float(r.get(gs_col, 0.0)) if gs_col else 0.0,
            d=float(r.get(d_col, 0.0)),
            accel=tuple(float(r.get(c, 0.0)) for c in accel_cols),
            frame=latest,
        ))
    header = LogHeader(
        method=mapping_config.get("method", "external"),
        arena_id=mapping_config.get("arena_id", "external"),
        arena_hash="", geometry_hash="", dt=dt,
    )
    footer = LogFooter(status=mapping_config.get("status", "completed"))
    log = EpisodeLog(header=header, ticks=ticks, footer=footer, frames=frames)
    log.validate()
    return log


def _read_csv(source) -> list:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as f:
            return list(csv.DictReader(f))
    return list(csv.DictReader(source))

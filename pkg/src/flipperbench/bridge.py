"""Teleoperation endpoint: one WebSocket session drives one simulated episode.

Wire format: JSON text messages with a "type" field.

  server -> client:  hello, state, end, error
  client -> server:  start, cmd, end

hello carries the schema version, the policy/arena catalog, and the arena
heightmap so the console can render terrain locally. After the client sends
start, the simulator ticks at the configured dt; the most recent cmd frame is
applied at each tick (latest wins) while every received frame is logged at its
own timestamp, so operator-activity scoring is independent of the tick rate.
State snapshots stream at roughly 30 Hz of simulated time.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import BenchConfig
from .gridmap import build_arena
from .logstore import (
    SCHEMA_VERSION,
    CommandFrame,
    EpisodeLog,
    LogFooter,
    LogHeader,
    TickRecord,
    write_log_path,
)
from .metrics import cognitive_load
from .policies import POLICY_NAMES, build_policy, manual_map
from .runner import CAPSIZE_LIMIT, _next_boundary, hash_geometry, hash_heightmap
from .sim import initial_state, step

STATE_HZ = 30.0


def _snapshot(state, policy) -> dict:
    """One state wire message from the current sim state."""
    return {
        "type": "state",
        "t": state.t,
        "x": state.x, "y": state.y, "z": state.z,
        "yaw": state.yaw, "pitch": state.pitch, "roll": state.roll,
        "theta": list(state.theta),
        "d": state.d,
        "accel": list(state.accel),
        "ground_speed": state.ground_speed,
        "mode": getattr(policy, "mode", getattr(getattr(policy, "inner", None), "mode", None)),
        "stuck": bool(getattr(policy, "stuck", False)),
    }


def _parse_cmd(msg: dict) -> CommandFrame:
    return CommandFrame(
        t=float(msg["t"]),
        buttons=tuple(int(b) for b in msg["buttons"]),
        axes=tuple(float(a) for a in msg["axes"]),
    )


class _Session:
    """Receives wire messages on a background task; the sim loop polls them."""

    def __init__(self, ws: WebSocket):
        self.ws = ws
        self.queue: asyncio.Queue = asyncio.Queue()
        self.closed = False

    async def pump(self):
        try:
            while True:
                text = await self.ws.receive_text()
                try:
                    msg = json.loads(text)
                    if not isinstance(msg, dict) or "type" not in msg:
                        raise ValueError("message must be an object with a type")
                except ValueError as e:
                    await self.send({"type": "error", "code": "malformed",
                                     "message": str(e)})
                    continue
                await self.queue.put(msg)
        except WebSocketDisconnect:
            self.closed = True
        except RuntimeError:
            self.closed = True

    async def send(self, payload: dict) -> bool:
        if self.closed:
            return False
        try:
            await self.ws.send_text(json.dumps(payload))
            return True
        except (WebSocketDisconnect, RuntimeError):
            self.closed = True
            return False

    def drain(self):
        out = []
        while not self.queue.empty():
            out.append(self.queue.get_nowait())
        return out


def create_app(cfg: BenchConfig, out_dir: Path, realtime: bool = False) -> FastAPI:
    """Bridge application; one operator session at a time on /session."""
    app = FastAPI(title="flipperbench bridge")
    app.state.busy = False
    hmap = build_arena(cfg.arena)
    out_dir = Path(out_dir)

    hello = {
        "type": "hello",
        "schema_version": SCHEMA_VERSION,
        "policies": list(POLICY_NAMES),
        "arenas": [{
            "id": cfg.arena_id,
            "resolution": hmap.resolution,
            "origin": list(hmap.origin),
            "shape": list(hmap.heights.shape),
            "sectors": [list(s) for s in cfg.arena.sectors],
        }],
        "heightmap": hmap.heights.round(4).tolist(),
    }

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await ws.accept()
        if app.state.busy:
            await ws.send_text(json.dumps(
                {"type": "error", "code": "busy",
                 "message": "another operator session is active"}))
            await ws.close()
            return
        app.state.busy = True
        sess = _Session(ws)
        pump = asyncio.create_task(sess.pump())

        async def run_episode():
            await sess.send(hello)
            start = None
            while start is None:
                msgs = sess.drain()
                if not msgs and sess.closed:
                    return
                for i, msg in enumerate(msgs):
                    if msg.get("type") == "start":
                        start = msg
                        for leftover in msgs[i + 1:]:
                            sess.queue.put_nowait(leftover)
                        break
                    if msg.get("type") == "cmd":
                        continue  # ignored before start
                    await sess.send({"type": "error", "code": "protocol",
                                     "message": f"expected start, got {msg.get('type')}"})
                await asyncio.sleep(0.005)
            method = start.get("method", "mfc-continuous")
            if method not in POLICY_NAMES:
                await sess.send({"type": "error", "code": "unknown-method",
                                 "message": f"registered: {', '.join(POLICY_NAMES)}"})
                return
            log = await _run_session(sess, cfg, hmap, method, realtime)
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / f"session-{int(time.time() * 1000)}.jsonl"
            write_log_path(log, path)
            await sess.send({
                "type": "end",
                "status": log.footer.status,
                "reason": log.footer.reason,
                "log": str(path),
                "cl": cognitive_load(log.command_stream()),
            })

        # runs as its own task so a torn-down connection cancels this
        # handler, not the episode: the sim loop sees the closed session,
        # aborts, and still persists its log.  Only ever await it through a
        # shield — a bare `await episode` would forward a second cancel
        # into the episode task itself.
        episode = asyncio.create_task(run_episode())
        try:
            while not episode.done():
                try:
                    await asyncio.shield(episode)
                except asyncio.CancelledError:
                    if episode.cancelled():
                        raise
                    sess.closed = True
        finally:
            pump.cancel()
            app.state.busy = False
            try:
                await ws.close()
            except RuntimeError:
                pass

    return app


async def _run_session(sess, cfg: BenchConfig, hmap, method, realtime) -> EpisodeLog:
    geometry = cfg.geometry
    econf = cfg.episode
    policy = build_policy(method, cfg.policy, geometry, hmap)
    policy.reset()
    mapping = cfg.mapping
    sectors = cfg.sectors()
    dt = econf.dt
    header = LogHeader(
        method=method, arena_id=cfg.arena_id, arena_hash=hash_heightmap(hmap),
        geometry_hash=hash_geometry(geometry), dt=dt, seed=econf.seed,
    )
    log = EpisodeLog(header=header)
    state = initial_state(hmap, geometry, econf.start_x, econf.start_y,
                          econf.start_yaw, econf.start_theta)
    end_arc = max(s.s_end for s in sectors)
    ordered = sorted(sectors, key=lambda s: s.s_start)
    boundary_time = state.t
    next_boundary = _next_boundary(state.x, ordered, end_arc)
    stream_every = max(1, round(1.0 / (STATE_HZ * dt)))
    latest = CommandFrame.zero(0.0, mapping.n_buttons, mapping.n_axes)
    status, reason = "failed", "timeout"
    tick = 0
    wall0 = time.monotonic()
    while state.t < econf.max_duration:
        msgs = sess.drain()
        if not msgs and sess.closed:
            status, reason = "aborted", "client disconnected"
            break
        for msg in msgs:
            kind = msg.get("type")
            if kind == "cmd":
                try:
                    frame = _parse_cmd(msg)
                except (KeyError, TypeError, ValueError) as e:
                    await sess.send({"type": "error", "code": "malformed",
                                     "message": f"bad cmd: {e}"})
                    continue
                log.frames.append(frame)
                latest = frame
            elif kind == "end":
                status, reason = "aborted", "operator end"
                break
        if status == "aborted":
            break
        if state.x >= end_arc:
            status, reason = "completed", ""
            break
        op = manual_map(latest, mapping)
        if op.stop:
            status, reason = "aborted", "operator stop"
            break
        cmd = policy.command(state, op, dt)
        lim = cfg.policy.theta_dot_max
        theta_dot = tuple(max(-lim, min(lim, w)) for w in cmd.resolve(state.theta, dt))
        state = step(state, (op.v, op.omega, theta_dot), dt, hmap, geometry)
        log.ticks.append(TickRecord(
            t=state.t, x=state.x, y=state.y, z=state.z, yaw=state.yaw,
            pitch=state.pitch, roll=state.roll, theta=state.theta,
            v_cmd=state.v_cmd, omega_cmd=state.omega_cmd,
            ground_speed=state.ground_speed, d=state.d, accel=state.accel,
            frame=CommandFrame(state.t, latest.buttons, latest.axes),
        ))
        if abs(state.pitch) > CAPSIZE_LIMIT or abs(state.roll) > CAPSIZE_LIMIT:
            status, reason = "failed", "capsize"
            break
        if state.x >= next_boundary:
            boundary_time = state.t
            next_boundary = _next_boundary(state.x, ordered, end_arc)
        elif state.t - boundary_time > econf.sector_timeout:
            status, reason = "failed", "sector timeout"
            break
        tick += 1
        if tick % stream_every == 0:
            await sess.send(_snapshot(state, policy))
        if realtime:
            lag = wall0 + state.t - time.monotonic()
            if lag > 0:
                await asyncio.sleep(lag)
        elif tick % 5 == 0:
            await asyncio.sleep(0)
    log.footer = LogFooter(status=status, reason=reason)
    return log


def serve(port: int, cfg: BenchConfig, policy: str, out_dir: Path) -> None:
    """Blocking real-time server for the browser console."""
    import uvicorn

    app = create_app(cfg, out_dir, realtime=True)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")

/**
 * Bridge session state machine: connect, handshake, frame emission, state
 * stream.  The socket, clock, and scheduler are injectable so the whole flow
 * runs under test without a browser or a live bridge.
 */
import {
  EndMsg,
  HelloMsg,
  StartMsg,
  StateMsg,
  parseServerMessage,
  schemaCompatible,
  SCHEMA_VERSION,
} from "./protocol.js";
import {
  ControllerMapping,
  DEFAULT_MAPPING,
  EncodedFrame,
  InputSnapshot,
  encodeFrame,
  frameToWire,
} from "./mapping.js";
import { LoadCounter } from "./load.js";

/** Minimal full-duplex text channel (subset of the browser WebSocket). */
export interface Channel {
  send(text: string): void;
  close(): void;
  onmessage: ((text: string) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export interface Scheduler {
  setInterval(fn: () => void, ms: number): unknown;
  clearInterval(handle: unknown): void;
  /** Monotonic seconds; frame timestamps come from here. */
  now(): number;
}

export type Phase =
  | "connecting"
  | "ready" // hello received, waiting for the operator to start
  | "active"
  | "ended"
  | "error";

export interface SessionEvents {
  onPhase?: (phase: Phase, detail: string) => void;
  onState?: (state: StateMsg) => void;
  onEnd?: (end: EndMsg) => void;
  onLoad?: (cl: number) => void;
}

export const EMIT_HZ = 30;

export class Session {
  phase: Phase = "connecting";
  detail = "";
  hello: HelloMsg | null = null;
  lastState: StateMsg | null = null;
  end: EndMsg | null = null;
  readonly load = new LoadCounter();
  readonly sentFrames: EncodedFrame[] = [];

  private emitter: unknown = null;
  private snapshotSource: (() => InputSnapshot) | null = null;

  constructor(
    private readonly channel: Channel,
    private readonly scheduler: Scheduler,
    private readonly events: SessionEvents = {},
    private readonly mapping: ControllerMapping = DEFAULT_MAPPING,
  ) {
    channel.onmessage = (text) => this.receive(text);
    channel.onerror = () => this.fail("connection failed — is the bridge running?");
    channel.onclose = () => {
      if (this.phase !== "ended" && this.phase !== "error") {
        this.fail("connection closed by the bridge");
      }
      this.stopEmitter();
    };
  }

  /** Policy names for the method picker; empty until hello arrives. */
  get policies(): string[] {
    return this.hello ? [...this.hello.policies] : [];
  }

  start(method: string, snapshotSource: () => InputSnapshot): void {
    if (this.phase !== "ready") {
      throw new Error(`cannot start in phase ${this.phase}`);
    }
    const msg: StartMsg = { type: "start", method };
    this.channel.send(JSON.stringify(msg));
    this.snapshotSource = snapshotSource;
    this.load.reset();
    this.setPhase("active", method);
    this.emitter = this.scheduler.setInterval(
      () => this.emitFrame(),
      1000 / EMIT_HZ,
    );
  }

  /** One cmd frame per emitter tick — idle input still emits all-zero
   *  frames so the load integral sees every sampling point. */
  private emitFrame(): void {
    if (this.phase !== "active" || !this.snapshotSource) return;
    const frame = encodeFrame(
      this.snapshotSource(),
      this.scheduler.now(),
      this.mapping,
    );
    const prev = this.sentFrames[this.sentFrames.length - 1];
    if (prev && frame.t <= prev.t) return; // clock did not advance yet
    this.channel.send(frameToWire(frame));
    this.sentFrames.push(frame);
    const cl = this.load.add(frame);
    this.events.onLoad?.(cl);
  }

  stop(): void {
    if (this.phase === "active") {
      this.channel.send(JSON.stringify({ type: "end" }));
    }
    this.stopEmitter();
  }

  private receive(text: string): void {
    let msg;
    try {
      msg = parseServerMessage(text);
    } catch {
      return; // unknown/garbled server frame: ignore, keep the session
    }
    switch (msg.type) {
      case "hello":
        if (!schemaCompatible(msg.schema_version)) {
          this.fail(
            `bridge speaks protocol ${msg.schema_version}, ` +
              `this console needs ${SCHEMA_VERSION}`,
          );
          return;
        }
        this.hello = msg;
        this.setPhase("ready", "");
        break;
      case "state":
        if (this.lastState && msg.t <= this.lastState.t) return; // stale
        this.lastState = msg;
        this.events.onState?.(msg);
        break;
      case "end":
        this.end = msg;
        this.stopEmitter();
        this.setPhase("ended", `${msg.status} ${msg.reason}`.trim());
        this.events.onEnd?.(msg);
        break;
      case "error":
        if (msg.code === "busy") {
          this.fail("bridge busy: another operator session is active");
        } else if (this.phase === "connecting") {
          this.fail(`${msg.code}: ${msg.message}`);
        }
        // non-fatal errors (e.g. one malformed cmd) leave the session alive
        break;
    }
  }

  private fail(detail: string): void {
    this.stopEmitter();
    this.setPhase("error", detail);
  }

  private stopEmitter(): void {
    if (this.emitter !== null) {
      this.scheduler.clearInterval(this.emitter);
      this.emitter = null;
    }
  }

  private setPhase(phase: Phase, detail: string): void {
    this.phase = phase;
    this.detail = detail;
    this.events.onPhase?.(phase, detail);
  }
}

/** Browser WebSocket wrapped as a Channel. */
export function webSocketChannel(url: string): Channel {
  const ws = new WebSocket(url);
  const chan: Channel = {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onmessage: null,
    onopen: null,
    onclose: null,
    onerror: null,
  };
  ws.onmessage = (ev) => chan.onmessage?.(String(ev.data));
  ws.onopen = () => chan.onopen?.();
  ws.onclose = () => chan.onclose?.();
  ws.onerror = () => chan.onerror?.();
  return chan;
}

export const browserScheduler: Scheduler = {
  setInterval: (fn, ms) => setInterval(fn, ms),
  clearInterval: (h) => clearInterval(h as ReturnType<typeof setInterval>),
  now: () => performance.now() / 1000,
};

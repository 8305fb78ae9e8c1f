/**
 * Orthographic side + top views of the arena and robot, drawn from the
 * heightmap downloaded at hello and the live state stream.  Pure 2D canvas;
 * clearance, stuck flag, load counter, and elapsed time render as text.
 */
import { ArenaInfo, StateMsg } from "./protocol.js";

export interface RobotShape {
  length: number; // hull length along x, m
  width: number; // hull width along y, m
  trackDrop: number; // belly height above track bottom, m
  flipperLength: number; // m
  trackY: number; // track centerline offset from hull centre, m
  dDesired: number; // clearance setpoint, m
}

export const DEFAULT_SHAPE: RobotShape = {
  length: 0.6,
  width: 0.5,
  trackDrop: 0.08,
  flipperLength: 0.3,
  trackY: 0.25,
  dDesired: 0.08,
};

export class ConsoleRenderer {
  private heights: number[][] = [];
  private arena: ArenaInfo | null = null;
  /** max terrain height, for shading/scaling */
  private hMax = 1;

  constructor(
    private readonly side: CanvasRenderingContext2D,
    private readonly top: CanvasRenderingContext2D,
    private readonly shape: RobotShape = DEFAULT_SHAPE,
  ) {}

  setArena(arena: ArenaInfo, heights: number[][]): void {
    this.arena = arena;
    this.heights = heights;
    this.hMax = Math.max(0.3, ...heights.map((row) => Math.max(...row)));
    this.drawTopTerrain();
  }

  /** Terrain height at (x, y) by nearest cell — display only. */
  private ground(x: number, y: number): number {
    if (!this.arena) return 0;
    const [x0, y0] = this.arena.origin;
    const res = this.arena.resolution;
    const j = Math.round((x - x0) / res);
    const i = Math.round((y - y0) / res);
    return this.heights[i]?.[j] ?? 0;
  }

  draw(state: StateMsg, cl: number): void {
    this.drawSide(state);
    this.drawTopTerrain();
    this.drawTopRobot(state);
    this.drawReadouts(state, cl);
  }

  private sideTransform(state: StateMsg) {
    const canvas = this.side.canvas;
    const span = 6; // metres of arena around the robot in view
    const sx = canvas.width / span;
    const sy = canvas.height / (this.hMax + 1.2);
    const s = Math.min(sx, sy * 2);
    const xPix = (x: number) => (x - state.x + span / 2) * s;
    const zPix = (z: number) => canvas.height - 20 - z * s;
    return { xPix, zPix, s };
  }

  private drawSide(state: StateMsg): void {
    const ctx = this.side;
    const { canvas } = ctx;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const { xPix, zPix } = this.sideTransform(state);

    // terrain profile under the robot's track line
    ctx.beginPath();
    ctx.strokeStyle = "#556";
    const yLine = state.y + this.shape.trackY;
    for (let px = 0; px < canvas.width; px += 2) {
      const x = state.x - 3 + (px / canvas.width) * 6;
      const z = this.ground(x, yLine);
      if (px === 0) ctx.moveTo(px, zPix(z));
      else ctx.lineTo(px, zPix(z));
    }
    ctx.stroke();

    // hull: a rotated rectangle at (x, z) with the body pitch.
    // positive pitch is nose down, so the screen-space nose drops.
    const { length, trackDrop, flipperLength } = this.shape;
    ctx.save();
    ctx.translate(xPix(state.x), zPix(state.z));
    ctx.rotate(state.pitch);
    ctx.fillStyle = state.stuck ? "#b33" : "#2a6";
    const hullPx = xPix(state.x + length) - xPix(state.x);
    const dropPx = zPix(0) - zPix(trackDrop);
    ctx.fillRect(-hullPx / 2, -dropPx, hullPx, dropPx);

    // flipper segments: front pair from the nose pivot, rear from the tail.
    // theta > 0 presses the tip below the track line.
    const flipPx = (flipperLength / length) * hullPx;
    const segs: Array<[number, number, number]> = [
      [hullPx / 2, state.theta[0], 1], // front-left
      [hullPx / 2, state.theta[1], 1], // front-right
      [-hullPx / 2, state.theta[2], -1], // rear-left
      [-hullPx / 2, state.theta[3], -1], // rear-right
    ];
    ctx.strokeStyle = "#089";
    ctx.lineWidth = 3;
    for (const [px0, theta, dir] of segs) {
      ctx.beginPath();
      ctx.moveTo(px0, 0);
      ctx.lineTo(
        px0 + dir * flipPx * Math.cos(theta),
        flipPx * Math.sin(theta),
      );
      ctx.stroke();
    }
    ctx.restore();
  }

  private drawTopTerrain(): void {
    if (!this.arena) return;
    const ctx = this.top;
    const { canvas } = ctx;
    const rows = this.heights.length;
    const cols = this.heights[0]?.length ?? 0;
    if (!rows || !cols) return;
    const img = ctx.createImageData(canvas.width, canvas.height);
    for (let py = 0; py < canvas.height; py++) {
      const i = Math.floor((py / canvas.height) * rows);
      for (let px = 0; px < canvas.width; px++) {
        const j = Math.floor((px / canvas.width) * cols);
        const shade = Math.round(
          40 + 200 * ((this.heights[i]?.[j] ?? 0) / this.hMax),
        );
        const k = (py * canvas.width + px) * 4;
        img.data[k] = shade;
        img.data[k + 1] = shade;
        img.data[k + 2] = shade + 10;
        img.data[k + 3] = 255;
      }
    }
    ctx.putImageData(img, 0, 0);
  }

  private drawTopRobot(state: StateMsg): void {
    if (!this.arena) return;
    const ctx = this.top;
    const { canvas } = ctx;
    const [x0, y0] = this.arena.origin;
    const res = this.arena.resolution;
    const rows = this.heights.length;
    const cols = this.heights[0]?.length ?? 0;
    const xPix = (x: number) => ((x - x0) / (res * cols)) * canvas.width;
    const yPix = (y: number) => ((y - y0) / (res * rows)) * canvas.height;
    ctx.save();
    ctx.translate(xPix(state.x), yPix(state.y));
    ctx.rotate(state.yaw);
    ctx.fillStyle = state.stuck ? "#f55" : "#4d4";
    const lw = xPix(x0 + this.shape.length) - xPix(x0);
    const ww = yPix(y0 + this.shape.width) - yPix(y0);
    ctx.fillRect(-lw / 2, -ww / 2, lw, ww);
    ctx.restore();
  }

  private drawReadouts(state: StateMsg, cl: number): void {
    const ctx = this.side;
    ctx.fillStyle = "#ddd";
    ctx.font = "13px monospace";
    const lines = [
      `t ${state.t.toFixed(1)}s   x ${state.x.toFixed(2)}m   load ${cl.toFixed(1)}`,
      `clearance ${state.d.toFixed(3)}m / ${this.shape.dDesired.toFixed(3)}m` +
        `   mode ${state.mode ?? "-"}`,
    ];
    lines.forEach((l, i) => ctx.fillText(l, 8, 16 + i * 16));
    if (state.stuck) {
      ctx.fillStyle = "#f44";
      ctx.font = "bold 18px monospace";
      ctx.fillText("STUCK — recovery active", 8, 60);
    }
  }
}

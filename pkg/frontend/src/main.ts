/** DOM wiring: connect form, method picker, canvases, status banner. */
import { Session, browserScheduler, webSocketChannel } from "./session.js";
import { ConsoleRenderer } from "./render.js";
import { GamepadSource, KeyboardSource } from "./input.js";
import { InputSnapshot } from "./mapping.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const banner = el<HTMLDivElement>("banner");
const picker = el<HTMLSelectElement>("method");
const connectBtn = el<HTMLButtonElement>("connect");
const startBtn = el<HTMLButtonElement>("start");
const stopBtn = el<HTMLButtonElement>("stop");
const urlInput = el<HTMLInputElement>("url");
const legend = el<HTMLPreElement>("legend");

const sideCtx = el<HTMLCanvasElement>("side").getContext("2d")!;
const topCtx = el<HTMLCanvasElement>("top").getContext("2d")!;
const renderer = new ConsoleRenderer(sideCtx, topCtx);

const gamepad = new GamepadSource();
const keyboard = new KeyboardSource(window);
legend.textContent = keyboard.legend().join("\n");

function snapshot(): InputSnapshot {
  return gamepad.connected ? gamepad.snapshot() : keyboard.snapshot();
}

let session: Session | null = null;
let liveCl = 0;

connectBtn.onclick = () => {
  banner.textContent = "connecting…";
  banner.className = "info";
  const chan = webSocketChannel(urlInput.value);
  session = new Session(chan, browserScheduler, {
    onPhase: (phase, detail) => {
      banner.textContent = detail ? `${phase}: ${detail}` : phase;
      banner.className = phase === "error" ? "error" : "info";
      if (phase === "ready" && session) {
        picker.innerHTML = "";
        for (const name of session.policies) {
          const opt = document.createElement("option");
          opt.value = opt.textContent = name;
          picker.appendChild(opt);
        }
        const hello = session.hello!;
        renderer.setArena(hello.arenas[0], hello.heightmap);
        startBtn.disabled = false;
      }
    },
    onState: (state) => renderer.draw(state, liveCl),
    onLoad: (cl) => {
      liveCl = cl;
    },
    onEnd: (end) => {
      banner.textContent =
        `${end.status}${end.reason ? ` (${end.reason})` : ""} — ` +
        `load ${end.cl.toFixed(2)}, log ${end.log}`;
    },
  });
};

startBtn.onclick = () => {
  liveCl = 0;
  session?.start(picker.value, snapshot);
  stopBtn.disabled = false;
};

stopBtn.onclick = () => session?.stop();

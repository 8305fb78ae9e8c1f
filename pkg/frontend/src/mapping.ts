/**
 * Controller layout and the frame encoder.
 *
 * Mirrors the bridge's decoder exactly: the left stick drives (x = turn,
 * y = drive), the right stick's y axis tilts one flipper at a time while the
 * matching modifier button (L1/R1/L2/R2 -> FL/FR/RL/RR, first held wins) is
 * down, face buttons select discrete modes, one button toggles the
 * semi-autonomous front mode, one stops the run.
 */

export interface ControllerMapping {
  axisTurn: number;
  axisDrive: number;
  axisFlipper: number;
  /** L1, R1, L2, R2 -> front-left, front-right, rear-left, rear-right. */
  modifierButtons: [number, number, number, number];
  /** One per discrete mode, in mode-table order. */
  modeButtons: [number, number, number, number, number];
  toggleButton: number;
  stopButton: number;
  nAxes: number;
  nButtons: number;
  /** Analog triggers report as axes on some pads; values beyond this
   *  threshold count as a press. */
  triggerThreshold: number;
}

export const DEFAULT_MAPPING: ControllerMapping = {
  axisTurn: 0,
  axisDrive: 1,
  axisFlipper: 3,
  modifierButtons: [0, 1, 2, 3],
  modeButtons: [4, 5, 6, 7, 8],
  toggleButton: 9,
  stopButton: 10,
  nAxes: 4,
  nButtons: 11,
  triggerThreshold: 0.5,
};

export const MODE_NAMES = [
  "DRIVE_FLAT",
  "APPROACH_FRONT_UP",
  "CLIMB",
  "DESCENT",
  "MAX_SUPPORT",
] as const;

/** Raw device sample before encoding: physical button/axis readings. */
export interface InputSnapshot {
  /** Per physical button: pressed flag, or analog value for triggers. */
  buttons: number[];
  axes: number[];
}

export interface EncodedFrame {
  t: number;
  buttons: number[];
  axes: number[];
}

const clamp = (v: number) => Math.max(-1, Math.min(1, v));

/**
 * Deterministic snapshot -> cmd frame encoding.
 *
 * Buttons are binarized (analog triggers via the threshold); axes are
 * clamped to [-1, 1] and passed through otherwise untouched — the bridge
 * owns deadzones and scaling so that the logged frames stay raw.
 */
export function encodeFrame(
  snapshot: InputSnapshot,
  t: number,
  mapping: ControllerMapping = DEFAULT_MAPPING,
): EncodedFrame {
  const buttons = new Array<number>(mapping.nButtons).fill(0);
  for (let i = 0; i < mapping.nButtons; i++) {
    const raw = snapshot.buttons[i] ?? 0;
    buttons[i] = raw >= mapping.triggerThreshold ? 1 : 0;
  }
  const axes = new Array<number>(mapping.nAxes).fill(0);
  for (let i = 0; i < mapping.nAxes; i++) {
    axes[i] = clamp(snapshot.axes[i] ?? 0);
  }
  return { t, buttons, axes };
}

export function frameToWire(frame: EncodedFrame): string {
  return JSON.stringify({
    type: "cmd",
    t: frame.t,
    buttons: frame.buttons,
    axes: frame.axes,
  });
}

/** Keyboard fallback: one key per channel, documented on screen. */
export interface KeyMap {
  driveForward: string;
  driveBack: string;
  turnLeft: string;
  turnRight: string;
  flipperUp: string;
  flipperDown: string;
  modifiers: [string, string, string, string];
  modes: [string, string, string, string, string];
  toggle: string;
  stop: string;
}

export const DEFAULT_KEYMAP: KeyMap = {
  driveForward: "w",
  driveBack: "s",
  turnLeft: "a",
  turnRight: "d",
  flipperUp: "ArrowUp",
  flipperDown: "ArrowDown",
  modifiers: ["u", "i", "j", "k"],
  modes: ["1", "2", "3", "4", "5"],
  toggle: "t",
  stop: "Escape",
};

/** Held-keys set -> the same snapshot shape a gamepad produces. */
export function keyboardSnapshot(
  held: ReadonlySet<string>,
  keymap: KeyMap = DEFAULT_KEYMAP,
  mapping: ControllerMapping = DEFAULT_MAPPING,
): InputSnapshot {
  const buttons = new Array<number>(mapping.nButtons).fill(0);
  const axes = new Array<number>(mapping.nAxes).fill(0);
  axes[mapping.axisDrive] =
    (held.has(keymap.driveForward) ? 1 : 0) - (held.has(keymap.driveBack) ? 1 : 0);
  axes[mapping.axisTurn] =
    (held.has(keymap.turnRight) ? 1 : 0) - (held.has(keymap.turnLeft) ? 1 : 0);
  axes[mapping.axisFlipper] =
    (held.has(keymap.flipperDown) ? 1 : 0) - (held.has(keymap.flipperUp) ? 1 : 0);
  keymap.modifiers.forEach((key, i) => {
    if (held.has(key)) buttons[mapping.modifierButtons[i]!] = 1;
  });
  keymap.modes.forEach((key, i) => {
    if (held.has(key)) buttons[mapping.modeButtons[i]!] = 1;
  });
  if (held.has(keymap.toggle)) buttons[mapping.toggleButton] = 1;
  if (held.has(keymap.stop)) buttons[mapping.stopButton] = 1;
  return { buttons, axes };
}

/**
 * Client-side view of what the bridge will do with a frame — used only for
 * the on-screen legend (e.g. "flippers inactive: hold a modifier").
 */
export function flipperChannelActive(
  frame: EncodedFrame,
  mapping: ControllerMapping = DEFAULT_MAPPING,
): boolean {
  return mapping.modifierButtons.some((b) => frame.buttons[b] === 1);
}

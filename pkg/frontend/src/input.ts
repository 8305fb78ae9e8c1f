/**
 * Device polling: browser Gamepad API with a keyboard fallback.
 *
 * Both produce the same InputSnapshot shape; the session's emitter polls
 * whichever source is active each tick.
 */
import {
  ControllerMapping,
  DEFAULT_KEYMAP,
  DEFAULT_MAPPING,
  InputSnapshot,
  KeyMap,
  keyboardSnapshot,
} from "./mapping.js";

/** Reads the first connected gamepad; analog triggers that surface as
 *  extra axes can be remapped onto buttons via `triggerAxes`. */
export class GamepadSource {
  constructor(
    private readonly mapping: ControllerMapping = DEFAULT_MAPPING,
    /** axis index -> button index, for pads exposing L2/R2 as axes. */
    private readonly triggerAxes: Record<number, number> = {},
  ) {}

  get connected(): boolean {
    return navigator.getGamepads().some((g) => g !== null);
  }

  snapshot(): InputSnapshot {
    const pad = navigator.getGamepads().find((g) => g !== null);
    const buttons = new Array<number>(this.mapping.nButtons).fill(0);
    const axes = new Array<number>(this.mapping.nAxes).fill(0);
    if (!pad) return { buttons, axes };
    pad.buttons.forEach((b, i) => {
      if (i < buttons.length) buttons[i] = b.value;
    });
    for (let i = 0; i < this.mapping.nAxes; i++) {
      axes[i] = pad.axes[i] ?? 0;
    }
    for (const [axis, button] of Object.entries(this.triggerAxes)) {
      const v = pad.axes[Number(axis)] ?? -1;
      // trigger axes rest at -1 and reach +1 fully pressed
      buttons[button] = (v + 1) / 2;
    }
    return { buttons, axes };
  }
}

/** Tracks held keys from DOM events and renders them as a snapshot. */
export class KeyboardSource {
  private readonly held = new Set<string>();

  constructor(
    target: { addEventListener: typeof window.addEventListener },
    private readonly keymap: KeyMap = DEFAULT_KEYMAP,
    private readonly mapping: ControllerMapping = DEFAULT_MAPPING,
  ) {
    target.addEventListener("keydown", (ev) => this.held.add((ev as KeyboardEvent).key));
    target.addEventListener("keyup", (ev) => this.held.delete((ev as KeyboardEvent).key));
  }

  snapshot(): InputSnapshot {
    return keyboardSnapshot(this.held, this.keymap, this.mapping);
  }

  /** Key legend lines for the on-screen fallback notice. */
  legend(): string[] {
    const k = this.keymap;
    return [
      `drive ${k.driveForward}/${k.driveBack}, turn ${k.turnLeft}/${k.turnRight}`,
      `flipper tilt ${k.flipperUp}/${k.flipperDown} while holding ` +
        `${k.modifiers.join("/")} (FL/FR/RL/RR)`,
      `modes ${k.modes.join("/")}, front-mode toggle ${k.toggle}, stop ${k.stop}`,
    ];
  }
}

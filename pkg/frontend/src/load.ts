/**
 * Client-side cognitive-load counter.
 *
 * Shares the bridge's formula exactly: load is the time integral of the
 * number of simultaneously active input channels, sampled at the frame
 * timestamps.  Each frame contributes pressedCount * (t_i - t_{i-1}); the
 * first frame contributes nothing unless an anchor time is given.
 */

export const AXIS_DEADZONE = 0.1;

export interface FrameSample {
  t: number;
  buttons: readonly number[];
  axes: readonly number[];
}

export function pressedCount(
  frame: FrameSample,
  deadzone: number = AXIS_DEADZONE,
): number {
  let n = 0;
  for (const b of frame.buttons) n += b;
  for (const a of frame.axes) if (Math.abs(a) > deadzone) n += 1;
  return n;
}

export function cognitiveLoad(
  frames: readonly FrameSample[],
  tPrev: number | null = null,
  deadzone: number = AXIS_DEADZONE,
): number {
  let cl = 0;
  let last = tPrev;
  for (const f of frames) {
    if (last !== null) {
      if (f.t <= last) {
        throw new Error("frame timestamps must be strictly increasing");
      }
      cl += pressedCount(f, deadzone) * (f.t - last);
    }
    last = f.t;
  }
  return cl;
}

/** Incremental accumulator for the live on-screen counter. */
export class LoadCounter {
  private total = 0;
  private last: number | null = null;

  constructor(private readonly deadzone: number = AXIS_DEADZONE) {}

  add(frame: FrameSample): number {
    if (this.last !== null) {
      if (frame.t <= this.last) {
        throw new Error("frame timestamps must be strictly increasing");
      }
      this.total += pressedCount(frame, this.deadzone) * (frame.t - this.last);
    }
    this.last = frame.t;
    return this.total;
  }

  get value(): number {
    return this.total;
  }

  reset(): void {
    this.total = 0;
    this.last = null;
  }
}

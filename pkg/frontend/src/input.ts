// Input mapping: on-screen joysticks/knobs (or keyboard/gamepad axes) to
// single-DOF velocity commands. One command per client tick while a control
// is held; release emits exactly one zero-velocity command then goes silent;
// a mode toggle while holding also leads with a zero command.

import { type ClientMsg, type Dof, cmdMsg, modeMsg, type ModeName } from "./protocol.js";

export interface InputBinding {
  control: string;      // e.g. "joystick-left-y", "knob-bending", "ArrowUp"
  dof: Dof;
  scale: number;        // deflection multiplier, usually +/-1
}

export const DEFAULT_BINDINGS: InputBinding[] = [
  { control: "joystick-advance", dof: "translation", scale: 1 },
  { control: "joystick-sheath-core", dof: "sheath_core", scale: 1 },
  { control: "knob-rotation", dof: "rotation", scale: 1 },
  { control: "knob-bending", dof: "bending", scale: 1 },
  { control: "knob-jaw", dof: "jaw", scale: 1 },
  { control: "joystick-sheath", dof: "sheath", scale: 1 },
  { control: "joystick-core", dof: "core", scale: 1 },
];

export class CommandThrottle {
  private seq = 0;
  private lastSent = -Infinity;
  private held: { dof: Dof; vf: number } | null = null;
  private zeroPending: Dof | null = null;
  readonly minIntervalMs: number;

  /** Client command rate never exceeds the server tick rate. */
  constructor(tickRateHz: number) {
    this.minIntervalMs = 1000 / tickRateHz;
  }

  /** Control deflection update; linear deflection -> velocity_fraction. */
  setDeflection(dof: Dof, deflection: number): void {
    const vf = Math.max(-1, Math.min(1, deflection));
    if (vf === 0) {
      if (this.held && this.held.dof === dof) {
        this.zeroPending = dof;
        this.held = null;
      }
      return;
    }
    if (this.held && this.held.dof !== dof) {
      // single-DOF rule: a new control takes over, the old one zeroes first
      this.zeroPending = this.held.dof;
    }
    this.held = { dof, vf };
  }

  release(): void {
    if (this.held) {
      this.zeroPending = this.held.dof;
      this.held = null;
    }
  }

  /** A mode toggle while holding must lead with a zero-velocity command. */
  beforeModeToggle(mode: ModeName): ClientMsg[] {
    const out: ClientMsg[] = [];
    if (this.held) {
      out.push(cmdMsg(this.held.dof, 0, this.nextSeq()));
      this.held = null;
      this.zeroPending = null;
    }
    out.push(modeMsg(mode));
    return out;
  }

  /** Message(s) to emit for this client tick (empty array = stay silent). */
  tick(nowMs: number): ClientMsg[] {
    if (nowMs - this.lastSent < this.minIntervalMs) return [];
    if (this.zeroPending !== null) {
      const dof = this.zeroPending;
      this.zeroPending = null;
      this.lastSent = nowMs;
      return [cmdMsg(dof, 0, this.nextSeq())];
    }
    if (this.held) {
      this.lastSent = nowMs;
      return [cmdMsg(this.held.dof, this.held.vf, this.nextSeq())];
    }
    return [];
  }

  private nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  get lastSeq(): number {
    return this.seq;
  }
}

// Wire protocol v1 (see ../docs/protocol.md). One JSON object per WebSocket
// text frame; one binary STL frame follows the scene message.

export const PROTOCOL_VERSION = 1;

export const DOF_NAMES = [
  "translation", "rotation", "sheath", "bending", "core", "jaw",
] as const;
export type Dof = (typeof DOF_NAMES)[number] | "sheath_core";

export const PHASES = [
  "initialization", "localization", "releasing", "anchoring", "retraction",
] as const;
export type PhaseName = (typeof PHASES)[number];
export type ModeName = "master_slave" | "copilot";

export interface SceneMsg {
  v: number;
  kind: "scene";
  bounds: [number[], number[]];
  target: { p1: number[]; p2: number[] };
  limits: { lo: number[]; hi: number[]; max_velocity: number[] };
  rig: {
    port_origin: number[];
    port_axis: number[];
    passive_length: number;
    active_length: number;
  };
  tick_rate: number;
  mode: ModeName;
  phase: PhaseName;
  mesh: string;
}

export interface StateMsg {
  v: number;
  kind: "state";
  t: number;
  joints: number[];
  tip: number[];
  tip_axis: number[];
  phase: PhaseName;
  mode: ModeName;
  scales: Record<string, number>;
  terminal: "running" | "success";
  intervening: boolean;
  allowed_dofs: string[];
  ack?: number;
}

export interface ErrorMsg {
  v: number;
  kind: "error";
  message: string;
}

export type ServerMsg = SceneMsg | StateMsg | ErrorMsg;

export interface CmdMsg {
  v: number;
  kind: "cmd";
  dof: Dof;
  velocity_fraction: number;
  seq?: number;
}

export interface ModeMsg {
  v: number;
  kind: "mode";
  mode: ModeName;
}

export interface PhaseMsg {
  v: number;
  kind: "phase";
  phase: PhaseName;
}

export type ClientMsg = CmdMsg | ModeMsg | PhaseMsg;

function isNumberArray(x: unknown, n?: number): x is number[] {
  return Array.isArray(x) && (n === undefined || x.length === n) &&
    x.every((v) => typeof v === "number" && Number.isFinite(v));
}

/** Parse and validate one server frame; returns null for anything malformed. */
export function parseServerMsg(raw: string): ServerMsg | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  if (m.v !== PROTOCOL_VERSION) return null;
  switch (m.kind) {
    case "state": {
      if (!isNumberArray(m.joints, 6)) return null;
      if (!isNumberArray(m.tip, 3) || !isNumberArray(m.tip_axis, 3)) return null;
      if (typeof m.t !== "number") return null;
      if (typeof m.phase !== "string" ||
          !PHASES.includes(m.phase as PhaseName)) return null;
      if (m.mode !== "master_slave" && m.mode !== "copilot") return null;
      if (typeof m.scales !== "object" || m.scales === null) return null;
      if (!Array.isArray(m.allowed_dofs)) return null;
      return m as unknown as StateMsg;
    }
    case "scene": {
      if (typeof m.tick_rate !== "number" || m.tick_rate <= 0) return null;
      const limits = m.limits as Record<string, unknown> | undefined;
      if (!limits || !isNumberArray(limits.lo, 6) ||
          !isNumberArray(limits.hi, 6) ||
          !isNumberArray(limits.max_velocity, 6)) return null;
      return m as unknown as SceneMsg;
    }
    case "error":
      return typeof m.message === "string" ? (m as unknown as ErrorMsg) : null;
    default:
      return null;
  }
}

export function cmdMsg(dof: Dof, velocityFraction: number, seq?: number): CmdMsg {
  const vf = Math.max(-1, Math.min(1, velocityFraction));
  const msg: CmdMsg = {
    v: PROTOCOL_VERSION, kind: "cmd", dof, velocity_fraction: vf,
  };
  if (seq !== undefined) msg.seq = seq;
  return msg;
}

export function modeMsg(mode: ModeName): ModeMsg {
  return { v: PROTOCOL_VERSION, kind: "mode", mode };
}

export function phaseMsg(phase: PhaseName): PhaseMsg {
  return { v: PROTOCOL_VERSION, kind: "phase", phase };
}

export function nextPhase(current: PhaseName): PhaseName | null {
  const i = PHASES.indexOf(current);
  return i >= 0 && i + 1 < PHASES.length ? PHASES[i + 1] : null;
}

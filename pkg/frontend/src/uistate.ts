// Server-authoritative UI state: every rendered joint value comes from the
// last state message, never from local prediction.

import type { SceneMsg, StateMsg } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface PendingCmd {
  seq: number;
  sentAt: number;
}

export class UiState {
  status: ConnectionStatus = "connecting";
  scene: SceneMsg | null = null;
  lastState: StateMsg | null = null;
  lastError = "";
  meshBytes: ArrayBuffer | null = null;
  roundTripMs: number | null = null;
  private pending = new Map<number, number>();

  onScene(msg: SceneMsg): void {
    this.scene = msg;
  }

  onMesh(bytes: ArrayBuffer): void {
    this.meshBytes = bytes;
  }

  onState(msg: StateMsg, now: number): void {
    this.lastState = msg;
    if (msg.ack !== undefined) {
      const sent = this.pending.get(msg.ack);
      if (sent !== undefined) {
        this.roundTripMs = now - sent;
        this.pending.delete(msg.ack);
      }
    }
  }

  onError(message: string): void {
    this.lastError = message;
  }

  commandSent(seq: number, now: number): void {
    this.pending.set(seq, now);
    if (this.pending.size > 256) {
      const oldest = this.pending.keys().next().value;
      if (oldest !== undefined) this.pending.delete(oldest);
    }
  }

  /** Joint values to render (always the server's, or null before first state). */
  joints(): number[] | null {
    return this.lastState ? [...this.lastState.joints] : null;
  }

  dofEnabled(dof: string): boolean {
    if (this.status !== "connected" || !this.lastState) return false;
    return this.lastState.allowed_dofs.includes(dof);
  }
}

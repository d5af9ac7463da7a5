import { describe, expect, it } from "vitest";
import type { StateMsg } from "../src/protocol.js";
import { UiState } from "../src/uistate.js";

function state(partial: Partial<StateMsg> = {}): StateMsg {
  return {
    v: 1, kind: "state", t: 0,
    joints: [1, 2, 3, 4, 5, 6],
    tip: [0, 0, 0], tip_axis: [0, 0, 1],
    phase: "localization", mode: "copilot",
    scales: {}, terminal: "running", intervening: false,
    allowed_dofs: ["translation", "rotation", "bending"],
    ...partial,
  };
}

describe("UiState", () => {
  it("renders only server-authoritative joints", () => {
    const ui = new UiState();
    expect(ui.joints()).toBeNull(); // nothing until the server speaks
    ui.onState(state({ joints: [9, 8, 7, 6, 5, 4] }), 0);
    expect(ui.joints()).toEqual([9, 8, 7, 6, 5, 4]);
    const copy = ui.joints()!;
    copy[0] = 1234; // mutating the render copy cannot touch the source
    expect(ui.joints()![0]).toBe(9);
  });

  it("measures round trip from command send to ack", () => {
    const ui = new UiState();
    ui.commandSent(5, 100);
    ui.onState(state({ ack: 5 }), 140);
    expect(ui.roundTripMs).toBe(40);
    // unknown acks are ignored
    ui.onState(state({ ack: 99 }), 200);
    expect(ui.roundTripMs).toBe(40);
  });

  it("gates DOFs by connection and server phase list", () => {
    const ui = new UiState();
    ui.onState(state(), 0);
    expect(ui.dofEnabled("bending")).toBe(false); // still "connecting"
    ui.status = "connected";
    expect(ui.dofEnabled("bending")).toBe(true);
    expect(ui.dofEnabled("sheath")).toBe(false);  // not allowed this phase
    ui.status = "disconnected";
    expect(ui.dofEnabled("bending")).toBe(false); // controls disabled offline
  });

  it("records errors and mesh bytes", () => {
    const ui = new UiState();
    ui.onError("phase change rejected");
    expect(ui.lastError).toContain("rejected");
    const bytes = new ArrayBuffer(16);
    ui.onMesh(bytes);
    expect(ui.meshBytes).toBe(bytes);
  });
});

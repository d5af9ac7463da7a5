// Sequential phase checklist. The server is authoritative: the panel only
// proposes the next phase (or an abort to retraction) and renders whatever
// phase the state stream reports.

import { PHASES, type PhaseName, nextPhase } from "./protocol.js";

export interface ChecklistItem {
  phase: PhaseName;
  state: "done" | "active" | "pending";
}

export interface PhasePanel {
  items: ChecklistItem[];
  advanceTo: PhaseName | null;  // what the advance button would request
  abortTo: PhaseName | null;    // retraction unless already there
}

export function phasePanel(current: PhaseName): PhasePanel {
  const idx = PHASES.indexOf(current);
  const items: ChecklistItem[] = PHASES.map((phase, i) => ({
    phase,
    state: i < idx ? "done" : i === idx ? "active" : "pending",
  }));
  return {
    items,
    advanceTo: nextPhase(current),
    abortTo: current === "retraction" ? null : "retraction",
  };
}

// Console wiring: connection, 3D view, per-DOF controls, gauges, phase panel.

import { catheterPolyline, type Rig } from "./catheter.js";
import { gaugePanel } from "./gauges.js";
import { CommandThrottle, DEFAULT_BINDINGS } from "./input.js";
import { phasePanel } from "./phases.js";
import { type Dof, type ModeName, type PhaseName, phaseMsg } from "./protocol.js";
import { BridgeClient } from "./net.js";
import { ConsoleScene } from "./scene3d.js";

const qs = new URLSearchParams(location.search);
const WS_URL = qs.get("ws") ?? "ws://127.0.0.1:8787";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const scene = new ConsoleScene(canvas);
let throttle = new CommandThrottle(50);
let sceneLoaded = false;

const client = new BridgeClient({ onUpdate: render });
client.connect(WS_URL);

// ---------------------------------------------------------------------------
// controls

const controlsEl = document.getElementById("controls")!;
const sliders = new Map<Dof, HTMLInputElement>();

for (const binding of DEFAULT_BINDINGS) {
  const row = document.createElement("div");
  row.className = "control-row";
  const label = document.createElement("label");
  label.textContent = binding.dof;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "-100";
  slider.max = "100";
  slider.value = "0";
  slider.dataset.dof = binding.dof;
  // self-recovering joystick: deflection streams while held, snaps to zero
  slider.addEventListener("input", () => {
    throttle.setDeflection(binding.dof, (Number(slider.value) / 100) * binding.scale);
  });
  const releaseHandler = () => {
    slider.value = "0";
    throttle.setDeflection(binding.dof, 0);
  };
  slider.addEventListener("pointerup", releaseHandler);
  slider.addEventListener("pointercancel", releaseHandler);
  row.append(label, slider);
  controlsEl.append(row);
  sliders.set(binding.dof, slider);
}

document.getElementById("mode-toggle")!.addEventListener("click", () => {
  const cur = client.state.lastState?.mode ?? "copilot";
  const next: ModeName = cur === "copilot" ? "master_slave" : "copilot";
  for (const msg of throttle.beforeModeToggle(next)) client.send(msg);
});

for (const name of ["top", "sagittal", "orbit"] as const) {
  document.getElementById(`view-${name}`)!.addEventListener("click", () =>
    scene.view(name),
  );
}

document.getElementById("phase-advance")!.addEventListener("click", () => {
  const panel = phasePanel((client.state.lastState?.phase ?? "initialization") as PhaseName);
  if (panel.advanceTo) client.send(phaseMsg(panel.advanceTo));
});
document.getElementById("phase-abort")!.addEventListener("click", () => {
  const panel = phasePanel((client.state.lastState?.phase ?? "initialization") as PhaseName);
  if (panel.abortTo) client.send(phaseMsg(panel.abortTo));
});

// client tick: at most one command per server tick interval
function clientTick() {
  for (const msg of throttle.tick(performance.now())) client.send(msg);
  requestAnimationFrame(clientTick);
}
requestAnimationFrame(clientTick);

// ---------------------------------------------------------------------------
// rendering

function render() {
  const ui = client.state;
  const banner = document.getElementById("banner")!;
  banner.textContent =
    ui.status === "connected" ? "" :
    ui.status === "connecting" ? "connecting..." :
    "disconnected - controls disabled";
  banner.className = ui.status;

  if (ui.scene && !sceneLoaded) {
    throttle = new CommandThrottle(ui.scene.tick_rate);
    if (ui.meshBytes) {
      scene.setScene(ui.scene, ui.meshBytes);
      sceneLoaded = true;
    }
  }

  const st = ui.lastState;
  if (st && ui.scene) {
    scene.setCatheter(catheterPolyline(st.joints, ui.scene.rig as Rig), st);

    // per-DOF enablement follows the server's phase gating
    for (const [dof, slider] of sliders) {
      const enabled = ui.dofEnabled(dof) ||
        (dof === "sheath_core" && ui.dofEnabled("sheath_core"));
      slider.disabled = !enabled || ui.status !== "connected";
      slider.parentElement!.classList.toggle("disabled", slider.disabled);
    }

    const gauges = gaugePanel(st.scales, st.mode);
    const gaugesEl = document.getElementById("gauges")!;
    gaugesEl.innerHTML = "";
    for (const g of gauges) {
      if (!g.visible) continue;
      const div = document.createElement("div");
      div.className = `gauge ${g.level}`;
      div.innerHTML = `<span>${g.dof}</span>` +
        `<div class="bar"><div class="fill" style="width:${g.fraction * 100}%"></div></div>` +
        `<span class="value">${g.label}</span>`;
      gaugesEl.append(div);
    }

    const phases = phasePanel(st.phase);
    const phasesEl = document.getElementById("phases")!;
    phasesEl.innerHTML = "";
    for (const item of phases.items) {
      const li = document.createElement("li");
      li.textContent = item.phase;
      li.className = item.state;
      phasesEl.append(li);
    }

    document.getElementById("hud")!.textContent =
      `t=${st.t.toFixed(1)}s mode=${st.mode} ` +
      `${st.terminal === "success" ? "ALIGNED" : ""} ` +
      (ui.roundTripMs !== null ? `rtt=${ui.roundTripMs.toFixed(0)}ms` : "");
    (document.getElementById("mode-toggle") as HTMLButtonElement).textContent =
      `mode: ${st.mode}`;
  }
  scene.render();
}

function fit() {
  scene.resize(canvas.clientWidth, canvas.clientHeight);
}
window.addEventListener("resize", fit);
fit();

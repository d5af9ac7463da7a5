// WebSocket client: routes the scene message, the single binary mesh frame
// and the state stream into UiState; sends client messages.

import { type ClientMsg, parseServerMsg } from "./protocol.js";
import { UiState } from "./uistate.js";

export interface NetHooks {
  onUpdate?: () => void;
}

export class BridgeClient {
  readonly state = new UiState();
  private ws: WebSocket | null = null;
  private hooks: NetHooks;

  constructor(hooks: NetHooks = {}) {
    this.hooks = hooks;
  }

  connect(url: string): void {
    this.state.status = "connecting";
    const ws = new WebSocket(url);
    ws.binaryType = "arraybuffer";
    ws.onopen = () => {
      this.state.status = "connected";
      this.changed();
    };
    ws.onmessage = (ev: MessageEvent) => {
      if (ev.data instanceof ArrayBuffer) {
        this.state.onMesh(ev.data);
        this.changed();
        return;
      }
      const msg = parseServerMsg(String(ev.data));
      if (!msg) return;
      if (msg.kind === "scene") this.state.onScene(msg);
      else if (msg.kind === "state") this.state.onState(msg, performance.now());
      else this.state.onError(msg.message);
      this.changed();
    };
    ws.onclose = () => {
      this.state.status = "disconnected";
      this.changed();
    };
    ws.onerror = () => {
      this.state.status = "disconnected";
      this.changed();
    };
    this.ws = ws;
  }

  send(msg: ClientMsg): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    if (msg.kind === "cmd" && msg.seq !== undefined) {
      this.state.commandSent(msg.seq, performance.now());
    }
    this.ws.send(JSON.stringify(msg));
    return true;
  }

  private changed(): void {
    this.hooks.onUpdate?.();
  }
}

// Three.js scene: translucent lumen mesh, 100-point catheter polyline,
// valve centerline, and camera presets (top / sagittal / free orbit).

import * as THREE from "three";
import type { SceneMsg, StateMsg } from "./protocol.js";

/** Minimal binary-STL triangle soup parser (the bridge sends binary STL). */
export function parseBinaryStl(buf: ArrayBuffer): Float32Array {
  const view = new DataView(buf);
  const n = view.getUint32(80, true);
  const out = new Float32Array(n * 9);
  let off = 84;
  for (let i = 0; i < n; i++) {
    off += 12; // facet normal, recomputed by three
    for (let k = 0; k < 9; k++) {
      out[i * 9 + k] = view.getFloat32(off, true);
      off += 4;
    }
    off += 2; // attribute byte count
  }
  return out;
}

export class ConsoleScene {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private catheter: THREE.Line;
  private targetLine: THREE.Line;
  private tipMarker: THREE.Mesh;
  private center = new THREE.Vector3();
  private orbit = { theta: 0.6, phi: 1.1, radius: 400 };
  private dragging = false;

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(40, 4 / 3, 1, 5000);
    this.scene.background = new THREE.Color(0x10141c);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const key = new THREE.DirectionalLight(0xffffff, 1.2);
    key.position.set(1, 2, 1.5);
    this.scene.add(key);

    this.catheter = new THREE.Line(
      new THREE.BufferGeometry(),
      new THREE.LineBasicMaterial({ color: 0x4dd0e1, linewidth: 2 }),
    );
    this.targetLine = new THREE.Line(
      new THREE.BufferGeometry(),
      new THREE.LineBasicMaterial({ color: 0xff5252 }),
    );
    this.tipMarker = new THREE.Mesh(
      new THREE.SphereGeometry(2.0, 12, 12),
      new THREE.MeshStandardMaterial({ color: 0xffc107 }),
    );
    this.scene.add(this.catheter, this.targetLine, this.tipMarker);
    this.bindOrbit(canvas);
  }

  setScene(scene: SceneMsg, meshBytes: ArrayBuffer): void {
    const tris = parseBinaryStl(meshBytes);
    const geo = new THREE.BufferGeometry();
    geo.setAttribute("position", new THREE.BufferAttribute(tris, 3));
    geo.computeVertexNormals();
    const mat = new THREE.MeshStandardMaterial({
      color: 0x8d6e63, transparent: true, opacity: 0.28,
      side: THREE.DoubleSide, depthWrite: false,
    });
    this.scene.add(new THREE.Mesh(geo, mat));

    const [lo, hi] = scene.bounds;
    this.center.set((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2);
    const extent = Math.max(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]);
    this.orbit.radius = extent * 2.2;

    const t = new Float32Array([...scene.target.p1, ...scene.target.p2]);
    this.targetLine.geometry.setAttribute("position", new THREE.BufferAttribute(t, 3));
    this.view("orbit");
  }

  /** Update the 100-point polyline from a state message + shape samples. */
  setCatheter(points: Float32Array, state: StateMsg): void {
    this.catheter.geometry.setAttribute(
      "position", new THREE.BufferAttribute(points, 3),
    );
    this.catheter.geometry.computeBoundingSphere();
    this.tipMarker.position.set(state.tip[0], state.tip[1], state.tip[2]);
  }

  /** Fallback when only the tip is known: draw port-to-tip chord. */
  setTipOnly(state: StateMsg, port: number[]): void {
    const pts = new Float32Array([...port, ...state.tip]);
    this.setCatheter(pts, state);
  }

  view(name: "top" | "sagittal" | "orbit"): void {
    if (name === "top") {
      this.orbit.theta = 0;
      this.orbit.phi = 0.02;
    } else if (name === "sagittal") {
      this.orbit.theta = Math.PI / 2;
      this.orbit.phi = Math.PI / 2;
    }
    this.applyOrbit();
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }

  resize(w: number, h: number): void {
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  private bindOrbit(canvas: HTMLCanvasElement): void {
    canvas.addEventListener("pointerdown", () => (this.dragging = true));
    window.addEventListener("pointerup", () => (this.dragging = false));
    window.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      this.orbit.theta -= e.movementX * 0.005;
      this.orbit.phi = Math.min(
        Math.PI - 0.05, Math.max(0.05, this.orbit.phi - e.movementY * 0.005),
      );
      this.applyOrbit();
    });
    canvas.addEventListener("wheel", (e) => {
      this.orbit.radius *= e.deltaY > 0 ? 1.1 : 0.9;
      this.applyOrbit();
      e.preventDefault();
    });
  }

  private applyOrbit(): void {
    const { theta, phi, radius } = this.orbit;
    this.camera.position.set(
      this.center.x + radius * Math.sin(phi) * Math.cos(theta),
      this.center.y + radius * Math.sin(phi) * Math.sin(theta),
      this.center.z + radius * Math.cos(phi),
    );
    this.camera.up.set(0, 0, -1);
    this.camera.lookAt(this.center);
  }
}

// Constant-curvature catheter polyline from the server's joint values and
// rig description. Pure geometry for display: joints stay server-authoritative.

export interface Rig {
  port_origin: number[];
  port_axis: number[];
  passive_length: number;
  active_length: number;
}

const N_POINTS = 100;
const DEG = Math.PI / 180;

type Vec3 = [number, number, number];

function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

function portFrame(axis: Vec3): [Vec3, Vec3, Vec3] {
  const z: Vec3 = [...axis] as Vec3;
  const n = norm(z);
  z[0] /= n; z[1] /= n; z[2] /= n;
  let ref: Vec3 = [1, 0, 0];
  if (Math.abs(z[0] * ref[0] + z[1] * ref[1] + z[2] * ref[2]) > 0.9) {
    ref = [0, 1, 0];
  }
  const d = ref[0] * z[0] + ref[1] * z[1] + ref[2] * z[2];
  const x: Vec3 = [ref[0] - d * z[0], ref[1] - d * z[1], ref[2] - d * z[2]];
  const nx = norm(x);
  x[0] /= nx; x[1] /= nx; x[2] /= nx;
  const y: Vec3 = [
    z[1] * x[2] - z[2] * x[1],
    z[2] * x[0] - z[0] * x[2],
    z[0] * x[1] - z[1] * x[0],
  ];
  return [x, y, z];
}

/**
 * World-frame flexible-segment polyline (N_POINTS x 3, flattened) for the
 * given joints under the same composition the server uses: bend the exposed
 * segment, roll the bend plane, advance along the port axis.
 */
export function catheterPolyline(joints: number[], rig: Rig): Float32Array {
  const [translation, rotation, sheath, bending, core] = joints;
  const exposed = Math.min(
    Math.max(rig.active_length - sheath + core, 10), rig.active_length + 60,
  );
  const theta = bending * DEG;
  const out = new Float32Array(N_POINTS * 3);
  const cr = Math.cos(rotation * DEG);
  const sr = Math.sin(rotation * DEG);
  const [px, py, pz] = portFrame(rig.port_axis as Vec3);
  const base = translation + rig.passive_length;
  for (let i = 0; i < N_POINTS; i++) {
    const s = (exposed * i) / (N_POINTS - 1);
    let lx = 0;
    let lz = s;
    if (theta > 1e-12) {
      const kappa = theta / exposed;
      lx = (1 - Math.cos(kappa * s)) / kappa;
      lz = Math.sin(kappa * s) / kappa;
    }
    // roll about local z, then lift into the port frame
    const rx = lx * cr;
    const ry = lx * sr;
    const rz = lz + base;
    out[i * 3] = rig.port_origin[0] + px[0] * rx + py[0] * ry + pz[0] * rz;
    out[i * 3 + 1] = rig.port_origin[1] + px[1] * rx + py[1] * ry + pz[1] * rz;
    out[i * 3 + 2] = rig.port_origin[2] + px[2] * rx + py[2] * ry + pz[2] * rz;
  }
  return out;
}

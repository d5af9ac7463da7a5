import { describe, expect, it } from "vitest";
import { catheterPolyline, type Rig } from "../src/catheter.js";

const RIG: Rig = {
  port_origin: [0, 0, 0],
  port_axis: [0, 0, 1],
  passive_length: 0,
  active_length: 120,
};

function tip(points: Float32Array): [number, number, number] {
  const n = points.length;
  return [points[n - 3], points[n - 2], points[n - 1]];
}

describe("catheterPolyline", () => {
  it("draws a straight segment at zero joints", () => {
    const pts = catheterPolyline([0, 0, 0, 0, 0, 0], RIG);
    expect(pts).toHaveLength(300);
    expect(tip(pts)).toEqual([0, 0, 120]);
    expect(pts[0]).toBe(0);
  });

  it("translation shifts the tip along the port axis", () => {
    const pts = catheterPolyline([25, 0, 0, 0, 0, 0], RIG);
    expect(tip(pts)[2]).toBeCloseTo(145, 9);
  });

  it("matches the analytic arc chord at 90 degrees", () => {
    const pts = catheterPolyline([0, 0, 0, 90, 0, 0], RIG);
    const R = 120 / (Math.PI / 2);
    const [x, y, z] = tip(pts);
    // Float32Array storage keeps ~7 significant digits
    expect(x).toBeCloseTo(R, 4);
    expect(y).toBeCloseTo(0, 6);
    expect(z).toBeCloseTo(R, 4);
  });

  it("rotation rolls the bend plane", () => {
    const pts = catheterPolyline([0, 90, 0, 90, 0, 0], RIG);
    const [x, y] = tip(pts);
    expect(x).toBeCloseTo(0, 6);
    expect(y).toBeGreaterThan(10);
  });

  it("sheath cover shortens the exposed bend", () => {
    const pts = catheterPolyline([0, 0, 20, 0, 0, 0], RIG);
    expect(tip(pts)[2]).toBeCloseTo(100, 9);
  });

  it("oblique port axes produce an orthonormal lift", () => {
    const rig: Rig = { ...RIG, port_axis: [1, 1, 0] };
    const pts = catheterPolyline([0, 0, 0, 0, 0, 0], rig);
    const t = tip(pts);
    const len = Math.hypot(t[0], t[1], t[2]);
    expect(len).toBeCloseTo(120, 6);
    expect(t[0]).toBeCloseTo(t[1], 6);
  });
});

// Governor gauge model: one gauge per planning DOF showing the live speed
// scale (1.00 = free, the floor means maximally slowed). Pure view-model;
// rendering reads these records.

export interface GaugeView {
  dof: string;
  value: number;      // scale in [floor, 1]
  fraction: number;   // bar fill in [0, 1]
  level: "free" | "limited" | "floor";
  label: string;
  visible: boolean;   // gauges only make sense under copilot control
}

export const SCALE_FLOOR_DEFAULT = 0.2;

export function gaugeView(
  dof: string,
  scale: number,
  mode: string,
  floor: number = SCALE_FLOOR_DEFAULT,
): GaugeView {
  const value = Math.max(0, Math.min(1, scale));
  let level: GaugeView["level"];
  if (value >= 0.995) level = "free";
  else if (value <= floor + 1e-9) level = "floor";
  else level = "limited";
  return {
    dof,
    value,
    fraction: value,
    level,
    label: value.toFixed(2),
    visible: mode === "copilot",
  };
}

export function gaugePanel(
  scales: Record<string, number>,
  mode: string,
  floor: number = SCALE_FLOOR_DEFAULT,
): GaugeView[] {
  return ["translation", "rotation", "bending"].map((dof) =>
    gaugeView(dof, scales[dof] ?? 1.0, mode, floor),
  );
}

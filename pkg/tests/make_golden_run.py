"""Regenerates tests/data/sample_run: a small recorded master-slave run plus
a golden metrics CSV computed by hand-rolled sums (independent of the
library's metric functions). Run from the repo root:

    python tests/make_golden_run.py
"""
import json
import math
import sys
from pathlib import Path

import numpy as np

from cathtwin.catheter import JointLimits, JointState, RigGeometry, forward_kinematics
from cathtwin.config import load_config
from cathtwin.copilot import ControlMode, OperatorProfile, SessionConfig
from cathtwin.geometry import synthesize_phantom
from cathtwin.planner import EnvConfig, InitDistribution, make_env
from cathtwin.runrecord import write_run_record
from cathtwin.simulate import ideal_view_lines, run_scripted_session
from cathtwin.viewmetrics import default_cameras, project_points

OUT = Path(__file__).parent / "data" / "sample_run"


def golden_metrics(traj, rig, cameras, ideal):
    """Brute-force metric sums: explicit loops, no library metric calls."""
    joints = traj.joints
    shapes = [forward_kinematics(JointState.from_array(j), rig) for j in joints]

    def pixels(cam, pts):
        return project_points(cam, pts).pixels

    ae = 0.0
    for cam_name in ("top", "sagittal"):
        cam = cameras[cam_name]
        for shape in shapes:
            px = pixels(cam, shape.points)
            total = 0.0
            for p, q in zip(px, ideal[cam_name]):
                total += math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2)
            ae += total / len(px)

    ptl = 0.0
    for cam_name in ("top", "sagittal"):
        cam = cameras[cam_name]
        tips = [pixels(cam, s.tip_position[None])[0] for s in shapes]
        for a, b in zip(tips[:-1], tips[1:]):
            ptl += math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)

    tips3 = [s.tip_position for s in shapes]
    ttl = 0.0
    for a, b in zip(tips3[:-1], tips3[1:]):
        ttl += math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    net = math.sqrt(sum((x - y) ** 2 for x, y in zip(tips3[-1], tips3[0])))
    me = net / ttl
    return ae, ptl, ttl, me


def main():
    cfg = load_config()
    model, target = synthesize_phantom(cfg.phantom)
    rig = RigGeometry(insertion_port=model.insertion_port,
                      passive_length=0.0, active_length=120.0)
    cameras = default_cameras(model.bounds)
    artifacts = {}
    rows = []
    for k in range(2):
        env = make_env(model, target, JointLimits.default(), EnvConfig(),
                       InitDistribution(), rig, seed=100 + k)
        env.reset()
        prof = OperatorProfile(reaction_delay=0.3, error_bias=0.05, noise=0.02,
                               seed=k)
        run = run_scripted_session(env, None, None, ControlMode.master_slave,
                                   prof, target, SessionConfig(), dt=0.05,
                                   max_time_s=120.0, record_every=10,
                                   profile_index=k)
        ideal = ideal_view_lines(run.goal_joints, rig, cameras)
        ae, ptl, ttl, me = golden_metrics(run.trajectory, rig, cameras, ideal)
        rows.append({
            "run": k, "mode": run.mode, "profile": k,
            "accumulated_error_px": ae,
            "projected_trajectory_length_px": ptl,
            "tip_trajectory_length_mm": ttl,
            "motion_efficiency": me,
            "total_time_s": run.total_time,
            "intervention_time_s": run.intervention_time,
            "success": run.success,
        })
        artifacts[f"trajectories/run_{k:03d}.jsonl"] = run.trajectory.to_jsonl()
        artifacts[f"ideal/run_{k:03d}.json"] = json.dumps({
            "goal_joints": run.goal_joints.tolist(),
            "true_target": {"p1": run.true_target.p1.tolist(),
                            "p2": run.true_target.p2.tolist()},
        }, sort_keys=True)
    artifacts["scene.json"] = json.dumps({
        "bounds": model.bounds.tolist(),
        "port_origin": model.insertion_port.origin.tolist(),
        "port_axis": model.insertion_port.axis.tolist(),
        "passive_length": 0.0,
        "active_length": 120.0,
    }, sort_keys=True)
    from cathtwin.simulate import metrics_csv
    artifacts["metrics.csv"] = metrics_csv(rows)
    write_run_record(OUT, cfg.snapshot(), artifacts)
    print(f"golden sample run written to {OUT}")


if __name__ == "__main__":
    sys.exit(main())

"""Closed-loop scripted-operator experiments comparing control modes.

Each run draws a random initial catheter state and a per-profile jittered
"true" annulus position (registration/tissue mismatch): the policy and maps
keep aiming at the nominal target while the scripted operator corrects
toward the true one, so co-piloted runs need only residual interventions
where master-slave runs are manual throughout. Metrics follow the evaluation
suite: view errors against the surgeon-calibrated ideal line, path lengths,
motion efficiency and the time split.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catheter import JointState, RigGeometry, forward_kinematics
from .copilot import (
    ControlMode,
    OperatorProfile,
    Phase,
    ScriptedOperator,
    Session,
    SessionConfig,
    init_session,
)
from .geometry.heart import HeartModel, ValveTarget
from .planner.env import LocalizationEnv, lateral_distance_to_axis
from .planner.sac import Policy
from .probmap import ProbabilityMap
from .trajectory import Trajectory, TrajectoryStep
from .viewmetrics import (
    CameraModel,
    accumulated_error,
    motion_efficiency,
    project_points,
    projected_trajectory_length,
    tip_positions,
    view_error,
)


def jitter_target(target: ValveTarget, magnitude_mm: float,
                  rng: np.random.Generator) -> ValveTarget:
    """Shift the annulus laterally (perpendicular to its axis)."""
    if magnitude_mm <= 0:
        return target
    u = target.axis
    ref = np.array([0.0, 1.0, 0.0]) if abs(u[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(u, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    ang = rng.uniform(0, 2 * np.pi)
    shift = magnitude_mm * (np.cos(ang) * e1 + np.sin(ang) * e2)
    return ValveTarget(p1=target.p1 + shift, p2=target.p2 + shift)


@dataclass
class SimRun:
    mode: str
    profile_index: int
    trajectory: Trajectory
    events_jsonl: str
    total_time: float
    intervention_time: float
    success: bool
    final_lateral_mm: float
    true_target: ValveTarget
    goal_joints: np.ndarray


def run_scripted_session(env: LocalizationEnv, policy: Policy | None,
                         maps: ProbabilityMap | None, mode: ControlMode,
                         profile: OperatorProfile, true_target: ValveTarget,
                         session_config: SessionConfig,
                         dt: float = 0.02, max_time_s: float = 600.0,
                         record_every: int = 5,
                         profile_index: int = 0) -> SimRun:
    """Tick one session with the scripted operator until aligned or timed out."""
    session = init_session(policy, maps, env, mode,
                           phase=Phase.localization, config=session_config)
    operator = ScriptedOperator(profile, env, target=true_target)

    traj = Trajectory()
    shape = forward_kinematics(session.joints, env.rig)
    traj.append(TrajectoryStep(
        t=0.0, joints=session.joints.as_array(),
        tip_position=shape.tip_position.copy(), tip_axis=shape.tip_axis.copy(),
        phase=session.phase.value,
    ))

    t = 0.0
    n = 0
    done = False
    while t < max_time_s and not done:
        cmd = operator.command(session, t)
        state = session.tick(dt, cmd)
        t += dt
        n += 1
        if n % record_every == 0:
            traj.append(TrajectoryStep(
                t=t, joints=state.joints,
                tip_position=state.tip_position, tip_axis=state.tip_axis,
                phase=state.phase, intervention=cmd is not None,
            ))
        lateral = session.tip_lateral_error(true_target)
        crossed = float(
            (state.tip_position - true_target.p1) @ true_target.axis
        ) >= 0.0
        autonomous_idle = (mode == ControlMode.master_slave or
                           session.nominal_idx >= len(session.nominal) or
                           session.manual_only)
        done = lateral <= profile.done_pos_tol and crossed and \
            cmd is None and autonomous_idle
    if n % record_every != 0:
        shape = forward_kinematics(session.joints, env.rig)
        traj.append(TrajectoryStep(
            t=t, joints=session.joints.as_array(),
            tip_position=shape.tip_position.copy(), tip_axis=shape.tip_axis.copy(),
            phase=session.phase.value,
        ))
    return SimRun(
        mode=mode.value,
        profile_index=profile_index,
        trajectory=traj,
        events_jsonl=session.events_jsonl(),
        total_time=session.total_time,
        intervention_time=session.intervention_time,
        success=done,
        final_lateral_mm=session.tip_lateral_error(true_target),
        true_target=true_target,
        goal_joints=operator.goal.copy(),
    )


def ideal_view_lines(goal_joints: np.ndarray, rig: RigGeometry,
                     cameras: dict[str, CameraModel]) -> dict[str, np.ndarray]:
    """Surgeon-calibrated ideal line stand-in: the aligned shape, projected."""
    j = JointState(translation=goal_joints[0], rotation=goal_joints[1],
                   bending=goal_joints[2])
    shape = forward_kinematics(j, rig)
    return {
        name: project_points(cam, shape.points).pixels
        for name, cam in cameras.items()
    }


def compute_run_metrics(traj: Trajectory, rig: RigGeometry,
                        cameras: dict[str, CameraModel],
                        ideal: dict[str, np.ndarray]) -> dict[str, float]:
    """AE / PTL / TTL / ME for one recorded trajectory.

    PTL sums the projected tip path over the top and sagittal views.
    """
    joints = traj.joints
    shapes = [forward_kinematics(JointState.from_array(j), rig) for j in joints]
    tve, sve = [], []
    ptl = 0.0
    for name in ("top", "sagittal"):
        cam = cameras[name]
        series = []
        tips = []
        for shape in shapes:
            px = project_points(cam, shape.points).pixels
            series.append(view_error(px, ideal[name]))
            tips.append(project_points(cam, shape.tip_position[None]).pixels[0])
        ptl += projected_trajectory_length(np.asarray(tips))
        (tve if name == "top" else sve).extend(series)
    ttl_tips = tip_positions(joints, rig)
    ttl = float(np.linalg.norm(np.diff(ttl_tips, axis=0), axis=1).sum())
    me = motion_efficiency(joints, rig) if ttl > 0 else float("nan")
    return {
        "accumulated_error_px": accumulated_error(tve, sve),
        "projected_trajectory_length_px": ptl,
        "tip_trajectory_length_mm": ttl,
        "motion_efficiency": me,
    }


def metrics_csv(rows: list[dict]) -> str:
    cols = ["run", "mode", "profile", "accumulated_error_px",
            "projected_trajectory_length_px", "tip_trajectory_length_mm",
            "motion_efficiency", "total_time_s", "intervention_time_s",
            "success"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(repr(float(r[c])) if isinstance(r[c], float)
                              else str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"

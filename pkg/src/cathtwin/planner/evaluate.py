"""Policy rollouts and the statistical evaluation over random initializations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..trajectory import Trajectory, TrajectoryStep
from .env import LocalizationEnv, TerminalKind
from .sac import Policy


def rollout(policy: Policy, env: LocalizationEnv,
            deterministic: bool = True) -> Trajectory:
    """Run one episode to termination, recording every step outcome."""
    obs = env.reset()
    traj = Trajectory()
    shape = env.tip()
    traj.append(TrajectoryStep(
        t=0.0,
        joints=env.joints.as_array(),
        tip_position=shape.tip_position.copy(),
        tip_axis=shape.tip_axis.copy(),
        reward_components=None,
        terminal=env.terminal.value,
    ))
    t = 0
    while env.terminal == TerminalKind.running:
        action = policy.act(obs, deterministic=deterministic)
        out = env.step(action)
        obs = out.observation
        t += 1
        traj.append(TrajectoryStep(
            t=float(t),
            joints=out.joints.as_array(),
            tip_position=out.tip_position,
            tip_axis=out.tip_axis,
            reward_components=out.reward.as_dict(),
            terminal=out.terminal.value,
        ))
    return traj


@dataclass
class LocalizationStats:
    position_error_mean: float
    position_error_std: float
    position_error_max: float
    orientation_error_mean: float
    orientation_error_std: float
    orientation_error_max: float
    success_rate: float
    n: int
    records: list[dict] = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"position error {self.position_error_mean:.2f} +/- "
            f"{self.position_error_std:.2f} mm (max {self.position_error_max:.2f}), "
            f"orientation error {self.orientation_error_mean:.2f} +/- "
            f"{self.orientation_error_std:.2f} deg (max {self.orientation_error_max:.2f}), "
            f"success {self.success_rate:.1%} over {self.n} rollouts"
        )


def evaluate(policy: Policy, env: LocalizationEnv, n: int = 100,
             seed: int = 0, deterministic: bool = True) -> LocalizationStats:
    """n seeded rollouts from random inits; terminal-state error statistics.

    Position error is the lateral distance from the tip to the target
    centerline at the terminal step; orientation error is the angle between
    the tip axis and the centerline axis.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    env.seed(seed)
    pos, ang, succ, records = [], [], [], []
    for k in range(n):
        traj = rollout(policy, env, deterministic=deterministic)
        lat, theta = env.errors()
        terminal = env.terminal
        pos.append(lat)
        ang.append(theta)
        succ.append(terminal == TerminalKind.success)
        records.append({
            "rollout": k,
            "position_error_mm": float(lat),
            "orientation_error_deg": float(theta),
            "terminal": terminal.value,
            "steps": len(traj) - 1,
            "reward": traj.total_reward(),
        })
    pos_a, ang_a = np.asarray(pos), np.asarray(ang)
    return LocalizationStats(
        position_error_mean=float(pos_a.mean()),
        position_error_std=float(pos_a.std()),
        position_error_max=float(pos_a.max()),
        orientation_error_mean=float(ang_a.mean()),
        orientation_error_std=float(ang_a.std()),
        orientation_error_max=float(ang_a.max()),
        success_rate=float(np.mean(succ)),
        n=n,
        records=records,
    )

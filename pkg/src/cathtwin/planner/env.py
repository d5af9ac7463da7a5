"""Localization environment: steer translation/rotation/bending from the SVC
to the tricuspid centerline.

Reward cases (collision, timeout or max bend, success, otherwise) follow the
four-branch rule with r_step applied every step and the lateral-error term
only in terminal branches. Wall contact blocks the commanded motion and pays
the collision penalty; it ends the episode only when terminate_on_collision
is set, since the locomotion task keeps running after a touch.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..catheter import (
    PLANNING_INDICES,
    JointLimits,
    JointState,
    RigGeometry,
    TipPose,
    clamp_joints,
    forward_kinematics,
)
from ..geometry.heart import HeartModel, ValveTarget, collision


class TerminalKind(str, enum.Enum):
    running = "running"
    collision = "collision"
    timeout = "timeout"
    max_bend = "max_bend"
    success = "success"


@dataclass(frozen=True)
class EnvConfig:
    max_steps: int = 200
    action_scale: tuple[float, float, float] = (2.0, 2.0, 2.0)  # mm, deg, deg
    success_pos_tol: float = 5.0   # mm lateral to the centerline
    success_ang_tol: float = 10.0  # deg tip axis vs centerline axis
    wall_margin: float = 1.0       # mm
    r_step: float = -50.0
    r_obstacle: float = -300.0
    r_target: float = 300.0
    w_err: float = 1.0             # per mm of summed lateral error
    terminate_on_collision: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.success_pos_tol <= 0 or self.success_ang_tol <= 0:
            raise ValueError("success tolerances must be > 0")
        if not (self.r_step < 0 and self.r_obstacle < 0 and self.r_target > 0):
            raise ValueError("reward constants must satisfy r_step<0, r_obstacle<0, r_target>0")


@dataclass(frozen=True)
class InitDistribution:
    """Uniform box around a nominal joint state on the three planning DOFs."""

    nominal: JointState = JointState(translation=20.0)
    translation_half_range: float = 15.0
    rotation_half_range: float = 30.0
    bending_lo: float = 0.0
    bending_hi: float = 10.0

    def sample(self, rng: np.random.Generator) -> JointState:
        return JointState(
            translation=self.nominal.translation
            + rng.uniform(-self.translation_half_range, self.translation_half_range),
            rotation=self.nominal.rotation
            + rng.uniform(-self.rotation_half_range, self.rotation_half_range),
            sheath=self.nominal.sheath,
            bending=rng.uniform(self.bending_lo, self.bending_hi),
            core=self.nominal.core,
            jaw=self.nominal.jaw,
        )


@dataclass(frozen=True)
class RewardBreakdown:
    step: float = 0.0
    obstacle: float = 0.0
    error: float = 0.0
    target: float = 0.0

    @property
    def total(self) -> float:
        return self.step + self.obstacle + self.error + self.target

    def as_dict(self) -> dict[str, float]:
        return {"step": self.step, "obstacle": self.obstacle,
                "error": self.error, "target": self.target}


def lateral_distance_to_axis(point: np.ndarray, tip_position: np.ndarray,
                             tip_axis: np.ndarray) -> float:
    """Distance from a point to the line through the tip along its axis.

    Equals sqrt(x^2 + y^2) of the point expressed in the tip frame, which is
    what the lateral-error reward term sums over P1 and P2.
    """
    d = np.asarray(point, dtype=np.float64) - tip_position
    along = d @ tip_axis
    return float(np.sqrt(max(d @ d - along * along, 0.0)))


def lateral_error_sum(tip_position, tip_axis, target: ValveTarget) -> float:
    return lateral_distance_to_axis(target.p1, tip_position, tip_axis) + \
        lateral_distance_to_axis(target.p2, tip_position, tip_axis)


def reward(tip, target: ValveTarget, terminal: TerminalKind,
           cfg: EnvConfig) -> RewardBreakdown:
    """Per-step reward for the given terminal kind (tip needs position+axis)."""
    r = RewardBreakdown(step=cfg.r_step)
    if terminal == TerminalKind.collision:
        return RewardBreakdown(step=cfg.r_step, obstacle=cfg.r_obstacle)
    err = -cfg.w_err * lateral_error_sum(tip.position, tip.axis, target)
    if terminal in (TerminalKind.timeout, TerminalKind.max_bend):
        return RewardBreakdown(step=cfg.r_step, error=err)
    if terminal == TerminalKind.success:
        return RewardBreakdown(step=cfg.r_step, error=err, target=cfg.r_target)
    return r


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: RewardBreakdown
    terminal: TerminalKind
    joints: JointState
    tip_position: np.ndarray
    tip_axis: np.ndarray
    collided: bool
    lateral_error: float
    angle_error: float


class LocalizationEnv:
    """Single-owner mutable environment; one agent loop per instance."""

    def __init__(self, model: HeartModel, target: ValveTarget,
                 limits: JointLimits, cfg: EnvConfig,
                 init_dist: InitDistribution, rig: RigGeometry, seed: int = 0):
        target.validate_inside(model)
        self.model = model
        self.target = target
        self.limits = limits
        self.cfg = cfg
        self.init_dist = init_dist
        self.rig = rig
        self._rng = np.random.default_rng(seed)
        self.joints: JointState | None = None
        self.steps = 0
        self.terminal = TerminalKind.running
        self._shape = None

    # -- lifecycle -----------------------------------------------------------

    def seed(self, seed: int) -> None:
        self._rng = np.random.default_rng(seed)

    def reset(self) -> np.ndarray:
        for _ in range(100):
            j = clamp_joints(self.init_dist.sample(self._rng), self.limits)
            shape = forward_kinematics(j, self.rig)
            if not collision(self.model, shape, self.cfg.wall_margin):
                self.joints = j
                self._shape = shape
                self.steps = 0
                self.terminal = TerminalKind.running
                return self.observation()
        raise RuntimeError("initial state still in collision after 100 redraws")

    def reset_to(self, joints: JointState) -> np.ndarray:
        """Reset to an explicit joint state (must be in-limits and collision-free)."""
        j = clamp_joints(joints, self.limits)
        shape = forward_kinematics(j, self.rig)
        if collision(self.model, shape, self.cfg.wall_margin):
            raise RuntimeError("requested reset state is in collision")
        self.joints = j
        self._shape = shape
        self.steps = 0
        self.terminal = TerminalKind.running
        return self.observation()

    # -- queries -------------------------------------------------------------

    def observation(self) -> np.ndarray:
        j = self.joints.as_array()
        lo, hi = self.limits.lo, self.limits.hi
        norm = 2.0 * (j - lo) / (hi - lo) - 1.0
        tipf = self._shape.to_tip_frame(np.vstack([self.target.p1, self.target.p2]))
        obs = np.concatenate([norm[list(PLANNING_INDICES)], tipf[0], tipf[1]])
        return obs.astype(np.float64)

    def errors(self) -> tuple[float, float]:
        """Lateral distance to the centerline (mm) and axis angle (deg)."""
        lat = lateral_distance_to_axis(
            self._shape.tip_position, self.target.p1, self.target.axis
        )
        cosang = float(np.clip(self._shape.tip_axis @ self.target.axis, -1.0, 1.0))
        return lat, float(np.degrees(np.arccos(cosang)))

    def crossed_entry_plane(self) -> bool:
        return float((self._shape.tip_position - self.target.p1) @ self.target.axis) >= 0.0

    def is_success_state(self) -> bool:
        lat, ang = self.errors()
        return (lat <= self.cfg.success_pos_tol and ang <= self.cfg.success_ang_tol
                and self.crossed_entry_plane())

    def tip(self):
        return self._shape

    # -- dynamics ------------------------------------------------------------

    def step(self, action) -> StepOutcome:
        if self.terminal != TerminalKind.running:
            raise RuntimeError(f"step() after terminal state {self.terminal.value}")
        a = np.clip(np.asarray(action, dtype=np.float64).reshape(3), -1.0, 1.0)
        j = self.joints.as_array()
        for k, idx in enumerate(PLANNING_INDICES):
            j[idx] += a[k] * self.cfg.action_scale[k]
        proposed = clamp_joints(JointState.from_array(j), self.limits)
        shape = forward_kinematics(proposed, self.rig)
        collided = collision(self.model, shape, self.cfg.wall_margin)
        self.steps += 1

        if collided:
            # blocked at the wall: state holds, collision branch pays
            if self.cfg.terminate_on_collision:
                self.terminal = TerminalKind.collision
            elif self.steps >= self.cfg.max_steps:
                self.terminal = TerminalKind.timeout
            case = TerminalKind.collision
        else:
            self.joints = proposed
            self._shape = shape
            at_max_bend = proposed.bending >= self.limits.hi[3] - 1e-9
            if self.is_success_state():
                self.terminal = TerminalKind.success
            elif at_max_bend:
                self.terminal = TerminalKind.max_bend
            elif self.steps >= self.cfg.max_steps:
                self.terminal = TerminalKind.timeout
            case = self.terminal if self.terminal != TerminalKind.running else TerminalKind.running

        breakdown = reward(self._tip_pose_view(), self.target, case, self.cfg)
        lat, ang = self.errors()
        return StepOutcome(
            observation=self.observation(),
            reward=breakdown,
            terminal=self.terminal,
            joints=self.joints,
            tip_position=self._shape.tip_position.copy(),
            tip_axis=self._shape.tip_axis.copy(),
            collided=collided,
            lateral_error=lat,
            angle_error=ang,
        )

    def _tip_pose_view(self) -> TipPose:
        return TipPose(position=self._shape.tip_position, axis=self._shape.tip_axis)


def make_env(model: HeartModel, target: ValveTarget, limits: JointLimits,
             cfg: EnvConfig, init_dist: InitDistribution,
             rig: RigGeometry, seed: int = 0) -> LocalizationEnv:
    return LocalizationEnv(model, target, limits, cfg, init_dist, rig, seed=seed)

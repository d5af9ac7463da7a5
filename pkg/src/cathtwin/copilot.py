"""Co-piloted controller: nominal-trajectory execution, single-DOF operator
interventions under the probability-map speed governor, post-intervention
replanning, and the surgical phase state machine.

Intervention semantics: while a command is live the nominal advance pauses
entirely, the commanded DOF moves at velocity_fraction * max_velocity *
speed_scale * dt (unscaled in master-slave mode) and every other DOF holds.
When the command stream goes idle for replan_idle_s the trajectory is
recomputed from the current state by a deterministic policy rollout.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .catheter import (
    DOF_NAMES,
    JointState,
    clamp_joints,
    forward_kinematics,
)
from .geometry.heart import collision
from .planner.env import LocalizationEnv, TerminalKind, lateral_distance_to_axis
from .planner.sac import Policy
from .probmap import DEFAULT_SCALE_FLOOR, ProbabilityMap, speed_scale


class Phase(str, enum.Enum):
    initialization = "initialization"
    localization = "localization"
    releasing = "releasing"
    anchoring = "anchoring"
    retraction = "retraction"


PHASE_ORDER = [Phase.initialization, Phase.localization, Phase.releasing,
               Phase.anchoring, Phase.retraction]

# "sheath_core" is the coupled joystick motion that moves both tubes together
ALLOWED_DOFS: dict[Phase, frozenset[str]] = {
    Phase.initialization: frozenset({"translation", "rotation"}),
    Phase.localization: frozenset({"translation", "rotation", "bending"}),
    Phase.releasing: frozenset({"sheath", "core", "sheath_core"}),
    Phase.anchoring: frozenset(),  # needle is pushed manually
    Phase.retraction: frozenset({"translation", "sheath", "core"}),
}

_GOVERNED_DOFS = frozenset({"translation", "rotation", "bending"})


class ControlMode(str, enum.Enum):
    master_slave = "master_slave"
    copilot = "copilot"


class PhaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class OperatorCommand:
    dof: str
    velocity_fraction: float
    timestamp: float = 0.0

    def __post_init__(self):
        if self.dof not in DOF_NAMES and self.dof != "sheath_core":
            raise ValueError(f"unknown DOF {self.dof!r}")
        if not -1.0 <= self.velocity_fraction <= 1.0:
            raise ValueError("velocity_fraction must be within [-1, 1]")


@dataclass(frozen=True)
class SessionConfig:
    tick_rate: float = 50.0
    replan_idle_s: float = 0.5
    waypoint_tol: float = 1e-6
    scale_floor: float = DEFAULT_SCALE_FLOOR
    lookahead: dict | None = None


@dataclass(frozen=True)
class SessionState:
    """Immutable snapshot published to observers after each tick."""

    t: float
    joints: np.ndarray
    tip_position: np.ndarray
    tip_axis: np.ndarray
    phase: str
    mode: str
    scales: dict[str, float]
    intervening: bool
    manual_only: bool
    blocked: bool


class Session:
    """One logical control loop owning all mutable session state."""

    def __init__(self, policy: Policy | None, maps: ProbabilityMap | None,
                 env: LocalizationEnv, mode: ControlMode,
                 phase: Phase = Phase.initialization,
                 config: SessionConfig = SessionConfig()):
        if mode == ControlMode.copilot and (policy is None or maps is None):
            raise ValueError("copilot mode requires a policy and probability maps")
        self.policy = policy
        self.maps = maps
        self.env = env
        self.mode = mode
        self.phase = phase
        self.config = config
        self.joints: JointState = env.joints if env.joints is not None else JointState()
        self.nominal: list[JointState] = []
        self.nominal_idx = 0
        self.events: list[dict] = []
        self.total_time = 0.0
        self.intervention_time = 0.0
        self.manual_only = False
        self.last_scales = {d: 1.0 for d in _GOVERNED_DOFS}
        self._idle_since: float | None = None
        self._intervened_since_replan = False
        self._shape = forward_kinematics(self.joints, env.rig)

        if mode == ControlMode.copilot:
            self.nominal = self._rollout_waypoints(env.init_dist.nominal)
            if not self.nominal:
                raise RuntimeError("nominal rollout failed from the ideal initial state")
        self.log("session_open", mode=mode.value, phase=phase.value,
                 nominal_len=len(self.nominal))

    # -- helpers --------------------------------------------------------------

    def log(self, kind: str, **payload) -> None:
        self.events.append({"t": self.total_time, "kind": kind, "payload": payload})

    def events_jsonl(self) -> str:
        return "\n".join(json.dumps(e) for e in self.events) + "\n"

    def _rollout_waypoints(self, start: JointState) -> list[JointState]:
        """Deterministic policy rollout from `start`, returned as waypoints."""
        env = self.env
        saved = (env.joints, env.steps, env.terminal, env._shape)
        try:
            env.reset_to(clamp_joints(start, env.limits))
            waypoints = [env.joints]
            obs = env.observation()
            while env.terminal == TerminalKind.running:
                out = env.step(self.policy.act(obs, deterministic=True))
                obs = out.observation
                waypoints.append(env.joints)
            ok = env.terminal == TerminalKind.success
        finally:
            env.joints, env.steps, env.terminal, env._shape = saved
        return waypoints if ok else []

    def snapshot(self, blocked: bool = False) -> SessionState:
        return SessionState(
            t=self.total_time,
            joints=self.joints.as_array(),
            tip_position=self._shape.tip_position.copy(),
            tip_axis=self._shape.tip_axis.copy(),
            phase=self.phase.value,
            mode=self.mode.value,
            scales=dict(self.last_scales),
            intervening=self._idle_since is None and self._intervened_since_replan,
            manual_only=self.manual_only,
            blocked=blocked,
        )

    # -- operations -----------------------------------------------------------

    def tick(self, dt: float, cmd: OperatorCommand | None = None) -> SessionState:
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.total_time += dt

        if cmd is not None and cmd.dof not in ALLOWED_DOFS[self.phase]:
            self.log("command_rejected", dof=cmd.dof, phase=self.phase.value)
            cmd = None

        blocked = False
        if cmd is not None:
            blocked = self._apply_command(cmd, dt)
            self.intervention_time += dt
            self._idle_since = None
            self._intervened_since_replan = True
        else:
            if (self.mode == ControlMode.copilot and self._intervened_since_replan):
                if self._idle_since is None:
                    self._idle_since = self.total_time
                elif self.total_time - self._idle_since >= self.config.replan_idle_s:
                    end_intervention_replan(self)
            if self.mode == ControlMode.copilot and not self.manual_only:
                blocked = self._advance_nominal(dt)
        return self.snapshot(blocked=blocked)

    def _apply_command(self, cmd: OperatorCommand, dt: float) -> bool:
        dofs = ("sheath", "core") if cmd.dof == "sheath_core" else (cmd.dof,)
        scale = 1.0
        if self.mode == ControlMode.copilot and cmd.dof in _GOVERNED_DOFS:
            scale = speed_scale(self.maps, self.joints, cmd.dof,
                                direction=np.sign(cmd.velocity_fraction) or 1.0,
                                lookahead=self.config.lookahead,
                                floor=self.config.scale_floor)
            self.last_scales[cmd.dof] = scale
        j = self.joints.as_array()
        limits = self.env.limits
        for d in dofs:
            i = limits.index(d)
            j[i] += cmd.velocity_fraction * limits.max_velocity[i] * scale * dt
        proposed = clamp_joints(JointState.from_array(j), limits)
        return self._try_move(proposed)

    def _advance_nominal(self, dt: float) -> bool:
        if self.nominal_idx >= len(self.nominal):
            return False
        target = self.nominal[self.nominal_idx].as_array()
        j = self.joints.as_array()
        step = self.env.limits.max_velocity * dt
        delta = np.clip(target - j, -step, step)
        proposed = clamp_joints(JointState.from_array(j + delta), self.env.limits)
        blocked = self._try_move(proposed)
        if np.max(np.abs(self.joints.as_array() - target)) <= self.config.waypoint_tol:
            self.nominal_idx += 1
        return blocked

    def _try_move(self, proposed: JointState) -> bool:
        """Apply the move unless it collides; returns True when blocked."""
        shape = forward_kinematics(proposed, self.env.rig)
        if collision(self.env.model, shape, self.env.cfg.wall_margin):
            self.log("move_blocked", joints=proposed.as_array().tolist())
            return True
        self.joints = proposed
        self._shape = shape
        return False

    def set_mode(self, mode: ControlMode) -> None:
        """Switch control mode live; entering copilot replans from the current state."""
        if mode == self.mode:
            return
        if mode == ControlMode.copilot:
            if self.policy is None or self.maps is None:
                raise ValueError("copilot mode requires a policy and probability maps")
            self.mode = mode
            end_intervention_replan(self)
        else:
            self.mode = mode
            self.nominal = []
            self.nominal_idx = 0
        self.log("mode_change", mode=mode.value)

    # -- queries --------------------------------------------------------------

    def tip_lateral_error(self, target=None) -> float:
        t = target if target is not None else self.env.target
        return lateral_distance_to_axis(self._shape.tip_position, t.p1, t.axis)


def init_session(policy: Policy | None, maps: ProbabilityMap | None,
                 env: LocalizationEnv, mode: ControlMode,
                 phase: Phase = Phase.initialization,
                 config: SessionConfig = SessionConfig()) -> Session:
    return Session(policy, maps, env, mode, phase, config)


def end_intervention_replan(session: Session) -> Session:
    """Recompute the nominal trajectory from the current (post-intervention) state."""
    if session.mode != ControlMode.copilot:
        raise RuntimeError("replanning only applies to copilot mode")
    waypoints = session._rollout_waypoints(session.joints)
    if not waypoints:
        session.manual_only = True
        session.nominal = []
        session.nominal_idx = 0
        session.log("replan_failed_manual_only")
    else:
        session.nominal = waypoints
        session.nominal_idx = 0
        session.manual_only = False
        session.log("replan", length=len(waypoints))
    session._intervened_since_replan = False
    session._idle_since = None
    return session


def set_phase(session: Session, nxt: Phase) -> Session:
    """Advance to the next phase in order, or abort to retraction from anywhere."""
    cur = PHASE_ORDER.index(session.phase)
    if nxt == Phase.retraction and session.phase != Phase.retraction:
        pass  # abort-to-retraction is always allowed
    elif cur + 1 >= len(PHASE_ORDER) or PHASE_ORDER[cur + 1] != nxt:
        raise PhaseError(f"illegal phase transition {session.phase.value} -> {nxt.value}")
    session.phase = nxt
    session.log("phase_change", phase=nxt.value)
    return session


# ---------------------------------------------------------------------------
# scripted operator

@dataclass(frozen=True)
class OperatorProfile:
    """Synthetic operator: proportional single-DOF corrections with bias/noise."""

    reaction_delay: float = 0.3       # s between decisions
    error_bias: float = 0.0           # systematic over/under-steer fraction
    intervention_threshold: float = 6.0  # mm tip lateral error before acting
    noise: float = 0.05               # command noise fraction
    done_pos_tol: float = 3.0         # mm lateral error considered "aligned"
    seed: int = 0


class ScriptedOperator:
    """Deterministic command source driving a session toward a valve target.

    Solves the constant-curvature alignment for goal joints, then issues
    proportional single-DOF commands in surgical order (rotation, then
    bending, then translation: the bend must be shaped inside the atrium
    before advancing through the annulus, or the straight tip jams into the
    far wall). In copilot mode it stays idle until the tip lateral error
    exceeds the intervention threshold.
    """

    _ERR_NORM = np.array([20.0, 30.0, 30.0])  # mm, deg, deg normalization
    _PRIORITY = (1, 2, 0)  # rotation, bending, translation
    _ACT_TOL = 0.02

    def __init__(self, profile: OperatorProfile, env: LocalizationEnv,
                 target=None):
        self.profile = profile
        self.env = env
        self.target = target if target is not None else env.target
        self.rng = np.random.default_rng(profile.seed)
        self._next_decision_t = profile.reaction_delay
        self._held: OperatorCommand | None = None
        self._held_i: int | None = None
        self._held_start: float | None = None
        self._stuck: set[int] = set()
        self._bend_cap = float("inf")
        self._cap_translation: float | None = None
        self.goal = self._solve_goal()

    def _solve_goal(self) -> np.ndarray:
        """(translation, rotation, bending) aligning the tip with the centerline."""
        rig = self.env.rig
        rp = rig.port_rotation()
        u = rp.T @ self.target.axis          # target axis in port frame
        p1 = rp.T @ (self.target.p1 - rig.insertion_port.origin)
        bending = float(np.degrees(np.arccos(np.clip(u[2], -1.0, 1.0))))
        rotation = float(np.degrees(np.arctan2(u[1], u[0])))
        theta = np.deg2rad(max(bending, 1e-6))
        length = rig.active_length
        radius = length / theta
        chord = np.array([radius * (1.0 - np.cos(theta)) * np.cos(np.deg2rad(rotation)),
                          radius * (1.0 - np.cos(theta)) * np.sin(np.deg2rad(rotation)),
                          radius * np.sin(theta)])
        z = np.array([0.0, 0.0, 1.0])
        proj = np.eye(3) - np.outer(u, u)
        w = proj @ z
        v0 = proj @ (chord - p1)
        translation = float(-(v0 @ w) / (w @ w)) - rig.passive_length
        # ensure the tip ends past the entry plane
        tip = chord + np.array([0, 0, translation + rig.passive_length])
        if (tip - p1) @ u < 0:
            translation += 2.0
        lo, hi = self.env.limits.lo, self.env.limits.hi
        return np.clip(np.array([translation, rotation, bending]),
                       [lo[0], lo[1], lo[3]], [hi[0], hi[1], hi[3]])

    def aligned(self, session: Session) -> bool:
        return session.tip_lateral_error(self.target) <= self.profile.done_pos_tol

    def command(self, session: Session, t: float) -> OperatorCommand | None:
        """Command for the tick at time t, or None to stay idle."""
        if t < self._next_decision_t:
            return self._held
        self._next_decision_t = t + self.profile.reaction_delay
        p = self.profile

        joints = session.joints.as_array()
        if self._held_i is not None and self._held_start is not None:
            moved = abs(joints[[0, 1, 3][self._held_i]] - self._held_start)
            if moved < 1e-9:
                self._stuck.add(self._held_i)
                # wall contact while bending up or advancing: ratchet the
                # bend back a little before trying again, the way an
                # operator eases off when they feel resistance
                if self._held_i == 2 and self._held.velocity_fraction > 0 or \
                        self._held_i == 0:
                    self._bend_cap = min(self._bend_cap, joints[3] - 2.0)
                    self._cap_translation = joints[0]
            else:
                self._stuck.clear()
        if (self._cap_translation is not None
                and abs(joints[0] - self._cap_translation) >= 4.0):
            self._bend_cap = float("inf")
            self._cap_translation = None

        lateral = session.tip_lateral_error(self.target)
        if session.mode == ControlMode.copilot:
            nominal_running = (not session.manual_only
                               and session.nominal_idx < len(session.nominal))
            if nominal_running:
                # let the autonomy drive unless it is drifting badly
                if lateral <= p.intervention_threshold:
                    self._drop_held()
                    return None
            elif lateral <= p.done_pos_tol:
                self._drop_held()
                return None

        effective_goal = self.goal.copy()
        effective_goal[2] = min(effective_goal[2], self._bend_cap)
        errs = self._dof_errors(session, effective_goal)
        candidates = [i for i in self._PRIORITY if errs[i] > self._ACT_TOL]
        if not candidates:
            self._drop_held()
            return None
        dof_i = next((i for i in candidates if i not in self._stuck), None)
        if dof_i is None:
            self._stuck.clear()
            dof_i = candidates[0]
        dof = ("translation", "rotation", "bending")[dof_i]
        j = joints[[0, 1, 3][dof_i]]
        err = effective_goal[dof_i] - j
        if dof_i == 1:
            err = (err + 180.0) % 360.0 - 180.0
        vf = 4.0 * err / self._ERR_NORM[dof_i]
        vf *= 1.0 + p.error_bias
        vf += p.noise * self.rng.standard_normal()
        vf = float(np.clip(vf, -1.0, 1.0))
        if abs(vf) < self._ACT_TOL:
            self._drop_held()
            return None
        self._held = OperatorCommand(dof=dof, velocity_fraction=vf, timestamp=t)
        self._held_i = dof_i
        self._held_start = float(j)
        return self._held

    def _drop_held(self) -> None:
        self._held = None
        self._held_i = None
        self._held_start = None

    def _dof_errors(self, session: Session, goal=None) -> np.ndarray:
        j = session.joints.as_array()[[0, 1, 3]]
        err = (self.goal if goal is None else goal) - j
        err[1] = (err[1] + 180.0) % 360.0 - 180.0  # wrap rotation
        return np.abs(err) / self._ERR_NORM


def scripted_operator(profile: OperatorProfile, env: LocalizationEnv,
                      target=None) -> ScriptedOperator:
    return ScriptedOperator(profile, env, target=target)

import numpy as np
import pytest

from cathtwin.catheter import JointLimits, JointState
from cathtwin.copilot import (
    ALLOWED_DOFS,
    ControlMode,
    OperatorCommand,
    OperatorProfile,
    Phase,
    PhaseError,
    Session,
    SessionConfig,
    end_intervention_replan,
    init_session,
    scripted_operator,
    set_phase,
)
from cathtwin.planner import EnvConfig, InitDistribution, make_env
from cathtwin.probmap import JointSampleSet, build_probability_maps


class OracleStubPolicy:
    """Proportional controller toward precomputed goal joints (test oracle)."""

    def __init__(self, env, goal):
        self.limits = env.limits
        self.scale = np.asarray(env.cfg.action_scale)
        self.goal = np.asarray(goal)

    def act(self, obs, deterministic=True, gen=None):
        lo = self.limits.lo[[0, 1, 3]]
        hi = self.limits.hi[[0, 1, 3]]
        joints = (np.asarray(obs[:3]) + 1.0) / 2.0 * (hi - lo) + lo
        return np.clip((self.goal - joints) / self.scale, -1.0, 1.0)


@pytest.fixture(scope="module")
def copilot_setup(phantom, default_limits, default_rig):
    model, target = phantom
    env = make_env(model, target, default_limits, EnvConfig(),
                   InitDistribution(), default_rig, seed=4)
    env.reset()
    profile = OperatorProfile(seed=0)
    goal = scripted_operator(profile, env).goal
    policy = OracleStubPolicy(env, goal)
    rng = np.random.default_rng(0)
    # visitation blanket over the region the sessions move through
    rows = np.column_stack([
        rng.uniform(5, 80, 4000),
        rng.normal(0.0, 25.0, 4000),
        rng.uniform(0, 60, 4000),
    ])
    samples = JointSampleSet(rows=rows, n_inits=1, seed=0, n_success=1,
                             success_mask=np.ones(4000, dtype=bool))
    maps = build_probability_maps(samples, default_limits, k_tb=2, k_rb=2, seed=0)
    return env, policy, maps


def fresh_session(copilot_setup, mode, phase=Phase.localization, **cfg_kwargs):
    env, policy, maps = copilot_setup
    env.seed(123)
    env.reset()
    cfg = SessionConfig(**cfg_kwargs) if cfg_kwargs else SessionConfig()
    if mode == ControlMode.master_slave:
        return init_session(None, None, env, mode, phase=phase, config=cfg)
    return init_session(policy, maps, env, mode, phase=phase, config=cfg)


class TestInitSession:
    def test_master_slave_has_empty_nominal(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave)
        assert s.nominal == []

    def test_copilot_has_nominal_trajectory(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.copilot)
        assert len(s.nominal) >= 1

    def test_copilot_requires_policy_and_maps(self, copilot_setup):
        env, _, _ = copilot_setup
        with pytest.raises(ValueError):
            init_session(None, None, env, ControlMode.copilot)

    def test_empty_tick_stream_keeps_master_slave_state(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave)
        before = s.joints.as_array().copy()
        for _ in range(10):
            s.tick(0.02)
        np.testing.assert_array_equal(s.joints.as_array(), before)


class TestPhaseMachine:
    def test_phase_order_allowed(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave,
                          phase=Phase.initialization)
        for nxt in (Phase.localization, Phase.releasing, Phase.anchoring,
                    Phase.retraction):
            set_phase(s, nxt)
            assert s.phase == nxt

    def test_skipping_phase_rejected(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave,
                          phase=Phase.localization)
        with pytest.raises(PhaseError):
            set_phase(s, Phase.anchoring)

    def test_abort_to_retraction_always_allowed(self, copilot_setup):
        for phase in (Phase.initialization, Phase.localization, Phase.releasing):
            s = fresh_session(copilot_setup, ControlMode.master_slave, phase=phase)
            set_phase(s, Phase.retraction)
            assert s.phase == Phase.retraction

    def test_allowed_dof_table(self):
        assert ALLOWED_DOFS[Phase.initialization] == {"translation", "rotation"}
        assert ALLOWED_DOFS[Phase.localization] == {"translation", "rotation", "bending"}
        assert ALLOWED_DOFS[Phase.releasing] == {"sheath", "core", "sheath_core"}
        assert ALLOWED_DOFS[Phase.anchoring] == frozenset()
        assert ALLOWED_DOFS[Phase.retraction] == {"translation", "sheath", "core"}

    def test_disallowed_command_rejected_logged_state_unchanged(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave,
                          phase=Phase.localization)
        before = s.joints.as_array().copy()
        s.tick(0.02, OperatorCommand(dof="sheath", velocity_fraction=1.0))
        np.testing.assert_array_equal(s.joints.as_array(), before)
        assert any(e["kind"] == "command_rejected" for e in s.events)
        assert s.intervention_time == 0.0


class TestTickSemantics:
    def test_master_slave_displacement_unscaled(self, copilot_setup, default_limits):
        s = fresh_session(copilot_setup, ControlMode.master_slave)
        before = s.joints.as_array().copy()
        s.tick(0.02, OperatorCommand(dof="bending", velocity_fraction=0.5))
        expected = 0.5 * default_limits.max_velocity[3] * 0.02
        delta = s.joints.as_array() - before
        assert delta[3] == pytest.approx(expected, abs=1e-12)
        assert np.all(delta[[0, 1, 2, 4, 5]] == 0.0)

    def test_copilot_full_speed_toward_high_density(self, copilot_setup, default_limits):
        s = fresh_session(copilot_setup, ControlMode.copilot)
        # maps cover bending 0..60: bending up from ~5 deg stays in support
        before = s.joints.as_array().copy()
        s.tick(0.02, OperatorCommand(dof="bending", velocity_fraction=1.0))
        delta = (s.joints.as_array() - before)[3]
        assert delta == pytest.approx(default_limits.max_velocity[3] * 0.02, rel=1e-9)
        assert s.last_scales["bending"] == pytest.approx(1.0)

    def test_copilot_floor_in_low_density(self, copilot_setup, default_limits):
        env, policy, maps = copilot_setup
        env.seed(123)
        env.reset()
        env.reset_to(JointState(translation=50.0, rotation=0.0, bending=40.0))
        s = init_session(policy, maps, env, ControlMode.copilot,
                         phase=Phase.localization,
                         config=SessionConfig(lookahead={"bending": 60.0}))
        before = s.joints.as_array().copy()
        s.tick(0.02, OperatorCommand(dof="bending", velocity_fraction=1.0))
        delta = (s.joints.as_array() - before)[3]
        assert s.last_scales["bending"] == pytest.approx(0.20)
        assert delta == pytest.approx(0.20 * default_limits.max_velocity[3] * 0.02,
                                      rel=1e-9)

    def test_single_dof_override_others_hold(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.copilot)
        before = s.joints.as_array().copy()
        s.tick(0.02, OperatorCommand(dof="rotation", velocity_fraction=0.7))
        delta = s.joints.as_array() - before
        assert delta[1] != 0.0
        assert np.all(delta[[0, 2, 3, 4, 5]] == 0.0)

    def test_copilot_advances_nominal_without_command(self, copilot_setup,
                                                      default_limits):
        s = fresh_session(copilot_setup, ControlMode.copilot)
        before = s.joints.as_array().copy()
        s.tick(0.02)
        delta = s.joints.as_array() - before
        assert np.any(delta != 0.0)
        assert np.all(np.abs(delta) <= default_limits.max_velocity * 0.02 + 1e-12)

    def test_governor_containment_bounds(self, copilot_setup, default_limits):
        s = fresh_session(copilot_setup, ControlMode.copilot)
        rng = np.random.default_rng(3)
        for _ in range(50):
            vf = float(rng.uniform(-1, 1))
            dof = ("translation", "rotation", "bending")[rng.integers(3)]
            i = default_limits.index(dof)
            before = s.joints.as_array().copy()
            s.tick(0.02, OperatorCommand(dof=dof, velocity_fraction=vf))
            moved = abs((s.joints.as_array() - before)[i])
            max_step = default_limits.max_velocity[i] * 0.02
            at_limit = (s.joints.as_array()[i] in (default_limits.lo[i],
                                                   default_limits.hi[i]))
            assert moved <= max_step + 1e-12
            if not at_limit and not s.events or not any(
                e["kind"] == "move_blocked" and e["t"] == s.total_time
                for e in s.events
            ):
                assert moved >= 0.20 * abs(vf) * max_step - 1e-12

    def test_time_accounting_exact(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave)
        dts = [0.02, 0.05, 0.02, 0.1, 0.02]
        cmds = [None,
                OperatorCommand(dof="translation", velocity_fraction=0.2),
                None,
                OperatorCommand(dof="rotation", velocity_fraction=-0.3),
                None]
        for dt, cmd in zip(dts, cmds):
            s.tick(dt, cmd)
        assert s.total_time == pytest.approx(sum(dts), abs=1e-15)
        assert s.intervention_time == pytest.approx(0.05 + 0.1, abs=1e-15)
        assert s.intervention_time <= s.total_time

    def test_mode_separation(self, copilot_setup):
        """Identical command stream: master-slave ignores policy and maps."""
        env, policy, maps = copilot_setup
        ends = []
        for use_assets in (False, True):
            env.seed(123)
            env.reset()
            s = init_session(policy if use_assets else None,
                             maps if use_assets else None,
                             env, ControlMode.master_slave,
                             phase=Phase.localization)
            rng = np.random.default_rng(9)
            for _ in range(40):
                dof = ("translation", "rotation", "bending")[rng.integers(3)]
                s.tick(0.02, OperatorCommand(dof=dof,
                                             velocity_fraction=float(rng.uniform(-1, 1))))
            ends.append(s.joints.as_array())
        np.testing.assert_array_equal(ends[0], ends[1])

    def test_dt_must_be_positive(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave)
        with pytest.raises(ValueError):
            s.tick(0.0)


class TestReplan:
    def test_idle_triggers_replan_event(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.copilot,
                          replan_idle_s=0.1)
        s.tick(0.02, OperatorCommand(dof="rotation", velocity_fraction=0.5))
        for _ in range(10):
            s.tick(0.02)
        assert sum(e["kind"] == "replan" for e in s.events) == 1

    def test_replan_first_waypoint_is_current_state(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.copilot)
        s.tick(0.02, OperatorCommand(dof="rotation", velocity_fraction=0.5))
        end_intervention_replan(s)
        np.testing.assert_array_equal(s.nominal[0].as_array(), s.joints.as_array())

    def test_replan_matches_independent_rollout(self, copilot_setup):
        """Zero-length intervention: replan equals a fresh deterministic rollout."""
        env, policy, maps = copilot_setup
        s = fresh_session(copilot_setup, ControlMode.copilot)
        for _ in range(5):
            s.tick(0.02)
        s.tick(0.02, OperatorCommand(dof="rotation", velocity_fraction=0.0))
        end_intervention_replan(s)
        expected = s._rollout_waypoints(s.joints)
        assert len(s.nominal) == len(expected)
        for a, b in zip(s.nominal, expected):
            np.testing.assert_array_equal(a.as_array(), b.as_array())

    def test_replan_requires_copilot(self, copilot_setup):
        s = fresh_session(copilot_setup, ControlMode.master_slave)
        with pytest.raises(RuntimeError):
            end_intervention_replan(s)


class TestScriptedOperator:
    def test_infinite_threshold_never_intervenes(self, copilot_setup):
        env, policy, maps = copilot_setup
        env.seed(123)
        env.reset()
        s = init_session(policy, maps, env, ControlMode.copilot,
                         phase=Phase.localization)
        op = scripted_operator(
            OperatorProfile(intervention_threshold=float("inf")), env)
        for k in range(200):
            assert op.command(s, k * 0.02) is None
            s.tick(0.02)
        assert s.intervention_time == 0.0

    def test_same_seed_same_command_stream(self, copilot_setup):
        env, policy, maps = copilot_setup
        streams = []
        for _ in range(2):
            env.seed(123)
            env.reset()
            s = init_session(None, None, env, ControlMode.master_slave,
                             phase=Phase.localization)
            op = scripted_operator(OperatorProfile(seed=5, noise=0.2), env)
            stream = []
            for k in range(150):
                cmd = op.command(s, k * 0.02)
                stream.append(None if cmd is None else (cmd.dof, cmd.velocity_fraction))
                s.tick(0.02, cmd)
            streams.append(stream)
        assert streams[0] == streams[1]

    def test_ideal_operator_converges_master_slave(self, copilot_setup):
        """Closed-loop oracle: unbiased operator completes localization manually."""
        from cathtwin.simulate import run_scripted_session
        env, policy, maps = copilot_setup
        env.seed(123)
        env.reset()
        profile = OperatorProfile(reaction_delay=0.1, error_bias=0.0, noise=0.0,
                                  seed=1)
        run = run_scripted_session(env, None, None, ControlMode.master_slave,
                                   profile, env.target, SessionConfig(),
                                   dt=0.05, max_time_s=240.0)
        assert run.success
        assert run.final_lateral_mm <= profile.done_pos_tol + 1e-9
        assert run.intervention_time > 0.5 * run.total_time

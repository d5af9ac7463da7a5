"""Rollout, evaluation and Monte-Carlo sampling against oracle stubs
(no trained policy needed: an analytic proportional controller stands in)."""
import numpy as np
import pytest

from cathtwin.catheter import JointState, clamp_joints
from cathtwin.copilot import OperatorProfile, scripted_operator
from cathtwin.planner import (
    EnvConfig,
    InitDistribution,
    TerminalKind,
    evaluate,
    make_env,
    reward,
    rollout,
)
from cathtwin.probmap import sample_trajectories
from cathtwin.trajectory import Trajectory


class StubPolicy:
    """Proportional drive toward fixed goal joints (deterministic oracle).

    Bending and translation cap each other (bend <= 10 deg + 0.6 deg/mm of
    advance, advance <= 25 mm + 0.9 mm/deg of bend) so the arc shapes
    progressively through the feasible corridor of the default phantom
    instead of jamming on the annulus rim or the far wall.
    """

    def __init__(self, env, goal):
        self.limits = env.limits
        self.scale = np.asarray(env.cfg.action_scale)
        self.goal = np.asarray(goal)

    def act(self, obs, deterministic=True, gen=None):
        lo = self.limits.lo[[0, 1, 3]]
        hi = self.limits.hi[[0, 1, 3]]
        joints = (np.asarray(obs[:3]) + 1.0) / 2.0 * (hi - lo) + lo
        staged = self.goal.copy()
        staged[2] = min(staged[2], 10.0 + 0.6 * joints[0])
        staged[0] = min(staged[0], 25.0 + 0.9 * joints[2])
        return np.clip((staged - joints) / self.scale, -1.0, 1.0)


class ZeroPolicy:
    def act(self, obs, deterministic=True, gen=None):
        return np.zeros(3)


@pytest.fixture()
def env(phantom, default_limits, default_rig):
    model, target = phantom
    return make_env(model, target, default_limits, EnvConfig(),
                    InitDistribution(), default_rig, seed=3)


@pytest.fixture()
def stub_policy(env):
    goal = scripted_operator(OperatorProfile(seed=0), env).goal
    return StubPolicy(env, goal)


class TestRollout:
    def test_deterministic_with_zero_variance_init(self, phantom, default_limits,
                                                   default_rig, stub_policy):
        model, target = phantom
        dist = InitDistribution(translation_half_range=0.0,
                                rotation_half_range=0.0, bending_hi=0.0)
        trajs = []
        for _ in range(2):
            env = make_env(model, target, default_limits, EnvConfig(), dist,
                           default_rig, seed=1)
            trajs.append(rollout(stub_policy, env).to_jsonl())
        assert trajs[0] == trajs[1]

    def test_length_bounded_by_max_steps(self, phantom, default_limits, default_rig):
        model, target = phantom
        env = make_env(model, target, default_limits, EnvConfig(max_steps=25),
                       InitDistribution(), default_rig, seed=2)
        traj = rollout(ZeroPolicy(), env)
        assert len(traj) - 1 <= 25
        assert traj.terminal == "timeout"

    def test_reward_sum_matches_replay(self, env, stub_policy, phantom):
        """Replay oracle: recompute each step's reward from its tip pose and
        terminal kind; sums must match exactly."""
        from cathtwin.catheter import TipPose
        _, target = phantom
        traj = rollout(stub_policy, env)
        replayed = 0.0
        for k, step in enumerate(traj.steps[1:], start=1):
            kind = TerminalKind(step.terminal)
            if kind == TerminalKind.running and step.reward_components["obstacle"]:
                kind = TerminalKind.collision  # blocked contact step
            tip = TipPose(position=step.tip_position,
                          axis=step.tip_axis / np.linalg.norm(step.tip_axis))
            replayed += reward(tip, target, kind, env.cfg).total
        assert replayed == pytest.approx(traj.total_reward(), abs=1e-9)

    def test_trajectory_jsonl_roundtrip(self, env, stub_policy):
        traj = rollout(stub_policy, env)
        again = Trajectory.from_jsonl(traj.to_jsonl())
        assert len(again) == len(traj)
        np.testing.assert_allclose(again.joints, traj.joints)
        assert again.total_reward() == pytest.approx(traj.total_reward())


class TestEvaluate:
    def test_oracle_init_on_centerline(self, phantom, default_limits, default_rig,
                                       stub_policy):
        """Init placed exactly at the aligned state: zero errors, success 1.0."""
        model, target = phantom
        goal = stub_policy.goal
        dist = InitDistribution(
            nominal=JointState(translation=goal[0], rotation=goal[1],
                               bending=goal[2]),
            translation_half_range=0.0, rotation_half_range=0.0,
            bending_lo=goal[2], bending_hi=goal[2],
        )
        env = make_env(model, target, default_limits, EnvConfig(), dist,
                       default_rig, seed=0)
        stats = evaluate(ZeroPolicy(), env, n=5, seed=1)
        assert stats.success_rate == 1.0
        assert stats.position_error_max == pytest.approx(0.0, abs=1e-6)
        assert stats.orientation_error_max == pytest.approx(0.0, abs=1e-6)

    def test_n1_equals_single_rollout(self, phantom, default_limits, default_rig,
                                      stub_policy):
        model, target = phantom
        env = make_env(model, target, default_limits, EnvConfig(),
                       InitDistribution(), default_rig, seed=5)
        stats = evaluate(stub_policy, env, n=1, seed=7)
        env2 = make_env(model, target, default_limits, EnvConfig(),
                        InitDistribution(), default_rig, seed=5)
        env2.seed(7)
        traj = rollout(stub_policy, env2)
        rec = stats.records[0]
        assert rec["steps"] == len(traj) - 1
        assert rec["reward"] == pytest.approx(traj.total_reward())
        assert stats.position_error_mean == rec["position_error_mm"]
        assert stats.n == 1

    def test_stub_reaches_success(self, env, stub_policy):
        stats = evaluate(stub_policy, env, n=10, seed=3)
        assert stats.success_rate == 1.0
        assert stats.position_error_max <= env.cfg.success_pos_tol


class TestSampling:
    def test_single_init_rows_equal_rollout_length(self, phantom, default_limits,
                                                   default_rig, stub_policy):
        model, target = phantom
        env = make_env(model, target, default_limits, EnvConfig(),
                       InitDistribution(), default_rig, seed=0)
        samples = sample_trajectories(stub_policy, env, n_inits=1, seed=11)
        env.seed(11 * 100003)
        traj = rollout(stub_policy, env)
        assert len(samples.rows) == len(traj)
        assert samples.n_inits == 1

    def test_same_seed_identical(self, env, stub_policy):
        a = sample_trajectories(stub_policy, env, n_inits=4, seed=2)
        b = sample_trajectories(stub_policy, env, n_inits=4, seed=2)
        np.testing.assert_array_equal(a.rows, b.rows)
        assert a.n_success == b.n_success

    def test_rows_within_limits(self, env, stub_policy, default_limits):
        samples = sample_trajectories(stub_policy, env, n_inits=5, seed=4)
        for row in samples.rows:
            j = JointState(translation=row[0], rotation=row[1], bending=row[2])
            assert clamp_joints(j, default_limits) == j

    def test_success_mask_filters(self, env, stub_policy):
        samples = sample_trajectories(stub_policy, env, n_inits=5, seed=4)
        ok_only = samples.filtered(successful_only=True)
        assert len(ok_only.rows) <= len(samples.rows)
        assert ok_only.success_mask.all()

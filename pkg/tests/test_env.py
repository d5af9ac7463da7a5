import numpy as np
import pytest

from cathtwin.catheter import JointState, TipPose
from cathtwin.planner import (
    EnvConfig,
    InitDistribution,
    TerminalKind,
    lateral_distance_to_axis,
    make_env,
    reward,
)


@pytest.fixture()
def env(phantom, default_limits, default_rig):
    model, target = phantom
    return make_env(model, target, default_limits, EnvConfig(),
                    InitDistribution(), default_rig, seed=0)


def tip_at(position, axis=(0, 0, 1)):
    a = np.asarray(axis, dtype=float)
    return TipPose(position=np.asarray(position, dtype=float),
                   axis=a / np.linalg.norm(a))


class TestRewardCases:
    """The four-branch reward rule with the published constants."""

    def test_collision_is_minus_350(self, phantom):
        _, target = phantom
        r = reward(tip_at([0, 0, 0]), target, TerminalKind.collision, EnvConfig())
        assert r.total == -350.0
        assert r.obstacle == -300.0 and r.step == -50.0
        assert r.error == 0.0 and r.target == 0.0

    def test_plain_step_is_minus_50(self, phantom):
        _, target = phantom
        r = reward(tip_at([0, 0, 0]), target, TerminalKind.running, EnvConfig())
        assert r.total == -50.0

    def test_success_zero_lateral_is_250(self, phantom):
        _, target = phantom
        # tip on the centerline pointing along it: both lateral errors vanish
        tip = tip_at(target.p1, target.axis)
        r = reward(tip, target, TerminalKind.success, EnvConfig())
        assert r.total == 250.0
        assert r.error == 0.0

    def test_timeout_hand_computed(self):
        from cathtwin.geometry.heart import ValveTarget
        # target points at tip-frame laterals (3,4) and (0,0): errors 5 and 0
        target = ValveTarget(p1=[3.0, 4.0, 10.0], p2=[0.0, 0.0, 20.0])
        tip = tip_at([0, 0, 0])
        r = reward(tip, target, TerminalKind.timeout, EnvConfig())
        assert r.error == pytest.approx(-5.0, abs=1e-12)
        assert r.total == pytest.approx(-55.0, abs=1e-12)

    def test_max_bend_includes_error(self, phantom):
        _, target = phantom
        tip = tip_at([0, 0, 0])
        expected = -(lateral_distance_to_axis(target.p1, tip.position, tip.axis)
                     + lateral_distance_to_axis(target.p2, tip.position, tip.axis))
        r = reward(tip, target, TerminalKind.max_bend, EnvConfig())
        assert r.error == pytest.approx(expected)
        assert r.total == pytest.approx(expected - 50.0)

    def test_total_equals_component_sum(self, phantom, rng):
        _, target = phantom
        for kind in TerminalKind:
            tip = tip_at(rng.uniform(-50, 50, 3), rng.uniform(-1, 1, 3))
            r = reward(tip, target, kind, EnvConfig())
            assert r.total == pytest.approx(
                r.step + r.obstacle + r.error + r.target, abs=1e-12
            )

    def test_case_exclusivity(self, phantom):
        _, target = phantom
        tip = tip_at([10, 10, 100])
        cases = {
            TerminalKind.collision: ("obstacle",),
            TerminalKind.timeout: ("error",),
            TerminalKind.max_bend: ("error",),
            TerminalKind.success: ("error", "target"),
            TerminalKind.running: (),
        }
        for kind, extras in cases.items():
            r = reward(tip, target, kind, EnvConfig())
            assert r.step == -50.0
            for comp in ("obstacle", "error", "target"):
                if comp in extras:
                    assert getattr(r, comp) != 0.0
                else:
                    assert getattr(r, comp) == 0.0


def test_env_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(max_steps=0)
    with pytest.raises(ValueError):
        EnvConfig(r_step=1.0)
    with pytest.raises(ValueError):
        EnvConfig(success_pos_tol=-1.0)


class TestEnvDynamics:
    def test_zero_variance_init_is_nominal(self, phantom, default_limits, default_rig):
        model, target = phantom
        dist = InitDistribution(translation_half_range=0.0, rotation_half_range=0.0,
                                bending_lo=0.0, bending_hi=0.0)
        env = make_env(model, target, default_limits, EnvConfig(), dist,
                       default_rig, seed=5)
        for _ in range(3):
            env.reset()
            assert env.joints == dist.nominal

    def test_same_seed_identical_resets(self, phantom, default_limits, default_rig):
        model, target = phantom
        seqs = []
        for _ in range(2):
            env = make_env(model, target, default_limits, EnvConfig(),
                           InitDistribution(), default_rig, seed=7)
            seqs.append([env.reset().tolist() for _ in range(5)])
        assert seqs[0] == seqs[1]

    def test_reset_state_collision_free(self, env, phantom):
        from cathtwin.geometry import collision
        from cathtwin.catheter import forward_kinematics
        model, _ = phantom
        for _ in range(10):
            env.reset()
            shape = forward_kinematics(env.joints, env.rig)
            assert not collision(model, shape, env.cfg.wall_margin)

    def test_zero_action_keeps_joints(self, env):
        env.reset()
        before = env.joints.as_array()
        out = env.step([0.0, 0.0, 0.0])
        np.testing.assert_array_equal(out.joints.as_array(), before)
        assert out.reward.total == -50.0
        assert out.terminal == TerminalKind.running

    def test_observation_layout(self, env):
        obs = env.reset()
        assert obs.shape == (9,)
        assert np.isfinite(obs).all()
        assert np.all(np.abs(obs[:3]) <= 1.0)

    def test_timeout_at_max_steps_exactly(self, phantom, default_limits, default_rig):
        model, target = phantom
        env = make_env(model, target, default_limits, EnvConfig(max_steps=17),
                       InitDistribution(), default_rig, seed=1)
        env.reset()
        for k in range(17):
            out = env.step([0.0, 0.0, 0.0])
            if k < 16:
                assert out.terminal == TerminalKind.running
        assert out.terminal == TerminalKind.timeout
        with pytest.raises(RuntimeError):
            env.step([0.0, 0.0, 0.0])

    def test_bending_drive_hits_max_bend(self, phantom, default_limits):
        # a short segment curled mid-atrium is the only place a full 160
        # degree bend fits inside the lumen
        from cathtwin.catheter import RigGeometry
        model, target = phantom
        rig = RigGeometry(insertion_port=model.insertion_port,
                          passive_length=0.0, active_length=50.0)
        cfg = EnvConfig(max_steps=500, action_scale=(2.0, 2.0, 8.0),
                        wall_margin=0.0)
        dist = InitDistribution(nominal=JointState(translation=100.0),
                                translation_half_range=0.0,
                                rotation_half_range=0.0, bending_hi=0.0)
        env = make_env(model, target, default_limits, cfg, dist, rig, seed=2)
        env.reset()
        out = None
        for _ in range(500):
            out = env.step([0.0, 0.0, 1.0])
            if out.terminal != TerminalKind.running:
                break
        assert out.terminal == TerminalKind.max_bend
        assert out.joints.bending == default_limits.hi[3]

    def test_action_clamped_to_limits(self, env, default_limits):
        env.reset()
        for _ in range(30):
            out = env.step([-1.0, -1.0, -1.0])
            a = out.joints.as_array()
            assert np.all(a >= default_limits.lo - 1e-12)
            assert np.all(a <= default_limits.hi + 1e-12)
            if out.terminal != TerminalKind.running:
                break

    def test_collision_blocks_and_penalizes(self, phantom, default_limits, default_rig):
        model, target = phantom
        env = make_env(model, target, default_limits, EnvConfig(),
                       InitDistribution(translation_half_range=0.0,
                                        rotation_half_range=0.0, bending_hi=0.0),
                       default_rig, seed=3)
        env.reset()
        hit = False
        for _ in range(60):
            before = env.joints.as_array()
            out = env.step([1.0, 0.0, 0.0])  # drive straight at the far wall
            if out.collided:
                hit = True
                np.testing.assert_array_equal(out.joints.as_array(), before)
                assert out.reward.total == -350.0
                assert out.terminal == TerminalKind.running
                break
        assert hit

    def test_terminate_on_collision_mode(self, phantom, default_limits, default_rig):
        model, target = phantom
        cfg = EnvConfig(terminate_on_collision=True)
        env = make_env(model, target, default_limits, cfg,
                       InitDistribution(translation_half_range=0.0,
                                        rotation_half_range=0.0, bending_hi=0.0),
                       default_rig, seed=3)
        env.reset()
        for _ in range(60):
            out = env.step([1.0, 0.0, 0.0])
            if out.terminal != TerminalKind.running:
                break
        assert out.terminal == TerminalKind.collision
        assert out.reward.total == -350.0

    def test_success_at_aligned_state(self, env, phantom):
        model, target = phantom
        env.reset()
        env.reset_to(JointState(translation=54.0, rotation=0.0, bending=39.0))
        out = env.step([0.3, 0.0, 0.3])
        assert out.terminal == TerminalKind.success
        assert out.reward.target == 300.0
        assert out.reward.total == pytest.approx(250.0 + out.reward.error)

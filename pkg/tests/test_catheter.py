import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cathtwin.catheter import (
    JointLimits,
    JointState,
    RigGeometry,
    bend_shape,
    clamp_joints,
    exposed_length,
    fk_lipschitz_bounds,
    forward_kinematics,
    tip_pose,
)
from cathtwin.geometry.heart import Pose


def test_clamp_in_range_identity(default_limits):
    j = JointState(translation=10, rotation=5, sheath=1, bending=30, core=2, jaw=10)
    assert clamp_joints(j, default_limits) == j


def test_clamp_over_max(default_limits):
    j = JointState(bending=default_limits.hi[3] + 5.0)
    assert clamp_joints(j, default_limits).bending == default_limits.hi[3]


def test_clamp_all_below_min(default_limits):
    j = JointState(translation=-10, rotation=-500, sheath=-1, bending=-5,
                   core=-1, jaw=-500)
    c = clamp_joints(j, default_limits).as_array()
    np.testing.assert_array_equal(c, default_limits.lo)


def test_clamp_idempotent(default_limits, rng):
    for _ in range(20):
        j = JointState.from_array(rng.uniform(-500, 500, 6))
        once = clamp_joints(j, default_limits)
        assert clamp_joints(once, default_limits) == once


def test_bend_zero_is_straight():
    s = bend_shape(0.0, 100.0)
    np.testing.assert_allclose(s.tip_position, [0, 0, 100], atol=1e-12)
    np.testing.assert_allclose(s.points[:, 0], 0.0)
    np.testing.assert_allclose(s.points[:, 1], 0.0)


def test_bend_90_analytic():
    s = bend_shape(90.0, 100.0)
    R = 100.0 / (np.pi / 2)
    np.testing.assert_allclose(s.tip_position, [R, 0.0, R], atol=1e-9)
    # independent check: numerically integrate the unit tangent along the arc
    thetas = np.linspace(0, np.pi / 2, 200001)
    tangents = np.stack([np.sin(thetas), np.zeros_like(thetas), np.cos(thetas)], axis=1)
    tip_num = np.trapz(tangents, dx=100.0 / 200000, axis=0)
    np.testing.assert_allclose(s.tip_position, tip_num, atol=1e-6)


def test_bend_180_analytic():
    s = bend_shape(180.0, 100.0)
    np.testing.assert_allclose(s.tip_position, [200.0 / np.pi, 0.0, 0.0], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(bending=st.floats(0.0, 160.0), length=st.floats(20.0, 200.0))
def test_arc_length_preserved(bending, length):
    """Equal spacing and arc-length parameterization over the whole range."""
    s = bend_shape(bending, length)
    seg = np.linalg.norm(np.diff(s.points, axis=0), axis=1)
    assert seg.max() - seg.min() < 1e-9
    # inscribed chords underestimate the arc by <= L * (theta/(2(n-1)))^2 / 6
    theta = np.deg2rad(bending)
    chord_sum = seg.sum()
    bound = length * (theta / (2 * 99)) ** 2 / 6 + 1e-9
    assert -1e-9 <= length - chord_sum <= bound + 1e-6
    # the represented arc length is exact
    assert s.arc_length == length


def test_fk_zero_joints_straight(default_rig):
    shape = forward_kinematics(JointState(), default_rig)
    expected_tip = default_rig.insertion_port.origin + np.array([0, 0, 120.0])
    np.testing.assert_allclose(shape.tip_position, expected_tip, atol=1e-12)
    np.testing.assert_allclose(shape.tip_axis, [0, 0, 1], atol=1e-12)


def test_fk_translation_shifts_tip(default_rig):
    t0 = forward_kinematics(JointState(), default_rig).tip_position
    t10 = forward_kinematics(JointState(translation=10.0), default_rig).tip_position
    np.testing.assert_allclose(t10 - t0, [0, 0, 10.0], atol=1e-12)


def test_fk_rotation_mirror_symmetry(default_rig):
    a = forward_kinematics(JointState(bending=45.0, rotation=0.0), default_rig)
    b = forward_kinematics(JointState(bending=45.0, rotation=180.0), default_rig)
    mirrored = a.tip_position * np.array([-1, -1, 1])
    np.testing.assert_allclose(b.tip_position, mirrored, atol=1e-9)


def test_fk_roll_equivariance(default_rig, rng):
    """Rotating the r=0 shape about the insertion axis reproduces rotation=r."""
    for _ in range(10):
        bending = rng.uniform(0, 160)
        r = rng.uniform(-180, 180)
        base = forward_kinematics(JointState(bending=bending), default_rig)
        rolled = forward_kinematics(JointState(bending=bending, rotation=r), default_rig)
        ang = np.deg2rad(r)
        c, s = np.cos(ang), np.sin(ang)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        o = default_rig.insertion_port.origin
        expected = (base.points - o) @ rot.T + o
        np.testing.assert_allclose(rolled.points, expected, atol=1e-9)


def test_fk_continuity_lipschitz(default_rig, rng):
    bounds = fk_lipschitz_bounds(default_rig)
    names = ["translation", "rotation", "sheath", "bending", "core", "jaw"]
    for _ in range(25):
        j = JointState(translation=rng.uniform(0, 100),
                       rotation=rng.uniform(-180, 180),
                       sheath=rng.uniform(0, 30),
                       bending=rng.uniform(1, 159),
                       core=rng.uniform(0, 30),
                       jaw=rng.uniform(-360, 360))
        tip0 = forward_kinematics(j, default_rig).tip_position
        for name in names:
            delta = rng.uniform(-0.5, 0.5)
            tip1 = forward_kinematics(j.with_dof(name, getattr(j, name) + delta),
                                      default_rig).tip_position
            assert np.linalg.norm(tip1 - tip0) <= bounds[name] * abs(delta) + 1e-9


def test_tip_pose_matches_fk(default_rig):
    j = JointState(translation=15.0, rotation=30.0, bending=60.0)
    shape = forward_kinematics(j, default_rig)
    tp = tip_pose(j, default_rig)
    np.testing.assert_allclose(tp.position, shape.tip_position)
    np.testing.assert_allclose(tp.axis, shape.tip_axis)
    assert np.linalg.norm(tp.axis) == pytest.approx(1.0, abs=1e-12)


def test_tip_frame_tangent_consistent(default_rig):
    j = JointState(translation=10.0, rotation=-40.0, bending=80.0)
    shape = forward_kinematics(j, default_rig)
    chord = shape.points[-1] - shape.points[-2]
    chord /= np.linalg.norm(chord)
    # last-chord direction approximates the analytic tip tangent
    assert chord @ shape.tip_axis > 0.9999


def test_sheath_core_exposed_length(default_rig):
    j = JointState(sheath=20.0)
    assert exposed_length(j, default_rig) == 100.0
    j2 = JointState(sheath=20.0, core=5.0)
    assert exposed_length(j2, default_rig) == 105.0
    shape = forward_kinematics(j, default_rig)
    np.testing.assert_allclose(shape.tip_position,
                               default_rig.insertion_port.origin + [0, 0, 100.0])


def test_port_frame_arbitrary_axis():
    rig = RigGeometry(insertion_port=Pose((5.0, -3.0, 2.0), (1.0, 1.0, 0.0)),
                      passive_length=0.0, active_length=50.0)
    shape = forward_kinematics(JointState(), rig)
    expected = rig.insertion_port.origin + 50.0 * rig.insertion_port.axis
    np.testing.assert_allclose(shape.tip_position, expected, atol=1e-12)
    rot = rig.port_rotation()
    np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(rot) == pytest.approx(1.0)


def test_joint_limits_validation():
    with pytest.raises(ValueError):
        JointLimits(lo=[0] * 6, hi=[0] * 6, max_velocity=[1] * 6)
    with pytest.raises(ValueError):
        JointLimits(lo=[0] * 6, hi=[1] * 6, max_velocity=[0] * 6)

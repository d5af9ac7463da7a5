"""Six-DOF delivery catheter: joint limits, constant-curvature shape, forward
kinematics.

DOF order follows the drive labels: translation (mm), rotation (deg), sheath
(mm), bending (deg), core (mm), jaw (deg). The flexible segment is a single
constant-curvature arc discretized into SHAPE_POINTS equally spaced samples;
"spacing" and "length" are measured along the arc (the inscribed chord
polyline is shorter by O(n^-2), about 4e-3 mm at full bend).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry.heart import Pose

SHAPE_POINTS = 100
DOF_NAMES = ("translation", "rotation", "sheath", "bending", "core", "jaw")
PLANNING_DOFS = ("translation", "rotation", "bending")
PLANNING_INDICES = (0, 1, 3)

_MIN_EXPOSED = 10.0  # mm of bendable segment that can never be covered


@dataclass(frozen=True)
class JointState:
    translation: float = 0.0  # overall advance along insertion axis, mm
    rotation: float = 0.0     # overall roll about the long axis, deg
    sheath: float = 0.0       # outer-sheath advance, mm
    bending: float = 0.0      # bending-tube angle, deg
    core: float = 0.0         # inner-core advance, mm
    jaw: float = 0.0          # gripping-jaw roll, deg

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in DOF_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "JointState":
        a = np.asarray(a, dtype=np.float64).reshape(6)
        return cls(**{n: float(v) for n, v in zip(DOF_NAMES, a)})

    def with_dof(self, dof: str, value: float) -> "JointState":
        if dof not in DOF_NAMES:
            raise ValueError(f"unknown DOF {dof!r}")
        return replace(self, **{dof: float(value)})


@dataclass(frozen=True)
class JointLimits:
    """Closed per-DOF intervals plus max velocities (mm/s or deg/s)."""

    lo: np.ndarray
    hi: np.ndarray
    max_velocity: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(6)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(6)
        v = np.asarray(self.max_velocity, dtype=np.float64).reshape(6)
        if np.any(lo >= hi):
            raise ValueError("joint limits require min < max per DOF")
        if np.any(v <= 0):
            raise ValueError("max velocities must be > 0")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "max_velocity", v)

    @classmethod
    def default(cls) -> "JointLimits":
        return cls(
            lo=[0.0, -180.0, 0.0, 0.0, 0.0, -360.0],
            hi=[300.0, 180.0, 60.0, 160.0, 60.0, 360.0],
            max_velocity=[5.0, 15.0, 5.0, 15.0, 5.0, 30.0],
        )

    def index(self, dof: str) -> int:
        return DOF_NAMES.index(dof)

    def contains(self, j: JointState, tol: float = 1e-9) -> bool:
        a = j.as_array()
        return bool(np.all(a >= self.lo - tol) and np.all(a <= self.hi + tol))


def clamp_joints(j: JointState, limits: JointLimits) -> JointState:
    return JointState.from_array(np.clip(j.as_array(), limits.lo, limits.hi))


@dataclass(frozen=True)
class CatheterShape:
    """Ordered polyline of the flexible segment, base to tip, plus tip frame."""

    points: np.ndarray      # (SHAPE_POINTS, 3) mm
    tip_position: np.ndarray  # (3,)
    tip_rotation: np.ndarray  # (3, 3), columns x/y/z, z = tip tangent
    arc_length: float

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.shape != (SHAPE_POINTS, 3):
            raise ValueError(f"shape must have exactly {SHAPE_POINTS} points")
        if not np.isfinite(p).all():
            raise ValueError("non-finite shape points")
        seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
        if seg.max() - seg.min() > 1e-6:
            raise ValueError("shape points are not equally spaced")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "tip_position", np.asarray(self.tip_position, dtype=np.float64).reshape(3))
        object.__setattr__(self, "tip_rotation", np.asarray(self.tip_rotation, dtype=np.float64).reshape(3, 3))

    @property
    def tip_axis(self) -> np.ndarray:
        return self.tip_rotation[:, 2]

    def to_tip_frame(self, world_points: np.ndarray) -> np.ndarray:
        """Express world points in the tip coordinate system."""
        p = np.atleast_2d(np.asarray(world_points, dtype=np.float64))
        return (p - self.tip_position) @ self.tip_rotation


@dataclass(frozen=True)
class TipPose:
    position: np.ndarray
    axis: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=np.float64).reshape(3)
        n = np.linalg.norm(a)
        if abs(n - 1.0) > 1e-9:
            raise ValueError("tip axis must be unit-norm")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))
        object.__setattr__(self, "axis", a)


@dataclass(frozen=True)
class RigGeometry:
    """Mounting of the catheter in the anatomy frame."""

    insertion_port: Pose
    passive_length: float = 0.0   # straight length between port and flexible base at translation 0
    active_length: float = 120.0  # nominal bendable-segment length, mm

    def port_rotation(self) -> np.ndarray:
        """Orthonormal frame with z = advance axis (deterministic x/y)."""
        z = self.insertion_port.axis
        ref = np.array([1.0, 0.0, 0.0])
        if abs(z @ ref) > 0.9:
            ref = np.array([0.0, 1.0, 0.0])
        x = ref - (ref @ z) * z
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        return np.column_stack([x, y, z])


def _bend_points(bending: float, active_length: float, n: int = SHAPE_POINTS) -> np.ndarray:
    if active_length <= 0:
        raise ValueError("active_length must be > 0")
    if bending < 0:
        raise ValueError("bending must be >= 0")
    s = np.linspace(0.0, active_length, n)
    theta = np.deg2rad(bending)
    if theta < 1e-12:
        pts = np.zeros((n, 3))
        pts[:, 2] = s
        return pts
    kappa = theta / active_length
    ang = kappa * s
    pts = np.zeros((n, 3))
    pts[:, 0] = (1.0 - np.cos(ang)) / kappa
    pts[:, 2] = np.sin(ang) / kappa
    return pts


def bend_shape(bending: float, active_length: float) -> CatheterShape:
    """Constant-curvature arc in the local x-z plane, base at origin along +z.

    Points sit at equal arc-length spacing; bending is the total subtended
    angle in degrees, 0 gives a straight segment along +z.
    """
    pts = _bend_points(bending, active_length)
    return CatheterShape(
        points=pts,
        tip_position=pts[-1],
        tip_rotation=_rot_y(np.deg2rad(bending)),
        arc_length=float(active_length),
    )


def _rot_z(deg: float) -> np.ndarray:
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(rad: float) -> np.ndarray:
    c, s = np.cos(rad), np.sin(rad)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def exposed_length(j: JointState, rig: RigGeometry) -> float:
    """Bendable length after the sheath covers / the core extends it (linear model)."""
    return float(np.clip(rig.active_length - j.sheath + j.core, _MIN_EXPOSED,
                         rig.active_length + 60.0))


def forward_kinematics(j: JointState, rig: RigGeometry) -> CatheterShape:
    """World-frame flexible-segment shape for a joint state.

    Composition: bend the exposed segment, roll the bend plane by `rotation`
    about the advance axis, then push the base `translation + passive_length`
    past the insertion port.
    """
    length = exposed_length(j, rig)
    local = _bend_points(j.bending, length)
    rz = _rot_z(j.rotation)
    rp = rig.port_rotation()
    base = np.array([0.0, 0.0, j.translation + rig.passive_length])
    world = (local @ rz.T + base) @ rp.T + rig.insertion_port.origin
    tip_rot = rp @ rz @ _rot_y(np.deg2rad(j.bending))
    return CatheterShape(
        points=world,
        tip_position=world[-1],
        tip_rotation=tip_rot,
        arc_length=length,
    )


def tip_pose(j: JointState, rig: RigGeometry) -> TipPose:
    shape = forward_kinematics(j, rig)
    return TipPose(position=shape.tip_position, axis=shape.tip_axis)


# Documented per-DOF Lipschitz bounds for |d tip / d joint|, used by the FK
# continuity property test. Angles enter in degrees, hence the pi/180.
def fk_lipschitz_bounds(rig: RigGeometry) -> dict[str, float]:
    length = rig.active_length + 60.0
    deg = np.pi / 180.0
    return {
        "translation": 1.0,
        "rotation": deg * length,
        "sheath": 2.0 + np.deg2rad(160.0),
        "bending": deg * length,
        "core": 2.0 + np.deg2rad(160.0),
        "jaw": 0.0,
    }

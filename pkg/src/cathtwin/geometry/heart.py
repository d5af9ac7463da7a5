"""Right-heart lumen model, valve target and containment/collision queries.

Conventions: millimeters everywhere; signed distance is negative inside the
lumen; points exactly on the surface report distance 0 and count as inside.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import make_query
from .trimesh_io import MeshError, TriangleMesh, load_mesh_bytes

SURFACE_EPS = 1e-9


@dataclass(frozen=True)
class Pose:
    """Origin plus unit axis (the catheter advance direction at the port)."""

    origin: np.ndarray
    axis: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        a = np.asarray(self.axis, dtype=np.float64).reshape(3)
        n = np.linalg.norm(a)
        if n == 0:
            raise ValueError("pose axis must be nonzero")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "axis", a / n)


@dataclass(frozen=True)
class HeartModel:
    """Immutable watertight lumen plus insertion port; queries are pure."""

    mesh: TriangleMesh
    insertion_port: Pose
    _query: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._query is None:
            object.__setattr__(self, "_query", make_query(self.mesh.triangles))

    @property
    def bounds(self) -> np.ndarray:
        return self.mesh.bounds

    def signed_distances(self, points: np.ndarray) -> np.ndarray:
        """Signed distance to the lumen wall for each query point (mm)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dist, _ = self._query.nearest(pts)
        inside = self._query.inside(pts)
        on_surface = dist <= SURFACE_EPS
        signed = np.where(inside, -dist, dist)
        signed[on_surface] = 0.0
        return signed

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dist, _ = self._query.nearest(pts)
        inside = self._query.inside(pts)
        return inside | (dist <= SURFACE_EPS)


@dataclass(frozen=True)
class ValveTarget:
    """Two calibrated points on the tricuspid centerline, p1 atrial side."""

    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=np.float64).reshape(3)
        p2 = np.asarray(self.p2, dtype=np.float64).reshape(3)
        if np.linalg.norm(p2 - p1) == 0:
            raise ValueError("valve target points must be distinct")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @property
    def axis(self) -> np.ndarray:
        d = self.p2 - self.p1
        return d / np.linalg.norm(d)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.p1 + self.p2)

    def validate_inside(self, model: HeartModel) -> None:
        ok = model.contains(np.vstack([self.p1, self.p2]))
        if not ok.all():
            raise ValueError("valve target points must lie inside the lumen")


@dataclass(frozen=True)
class ContainmentResult:
    inside: bool
    distance: float  # signed, negative inside


def load_heart_model(
    mesh_bytes: bytes,
    unit_scale: float = 1.0,
    svc_axis=(0.0, 0.0, -1.0),
) -> HeartModel:
    """Parse and validate a lumen mesh (STL binary/ASCII or OBJ).

    The insertion port defaults to the mesh vertex farthest along svc_axis
    (the direction pointing out of the heart toward the vena cava entry),
    with the advance axis pointing back in.
    """
    mesh = load_mesh_bytes(mesh_bytes, unit_scale=unit_scale)
    mesh.validate_closed()
    axis = np.asarray(svc_axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0:
        raise MeshError("svc_axis must be nonzero")
    axis = axis / n
    port_vertex = mesh.vertices[np.argmax(mesh.vertices @ axis)]
    return HeartModel(mesh=mesh, insertion_port=Pose(port_vertex, -axis))


def containment_query(model: HeartModel, points) -> list[ContainmentResult]:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    signed = model.signed_distances(pts)
    return [
        ContainmentResult(inside=bool(d <= 0.0), distance=float(d)) for d in signed
    ]


def collision(model: HeartModel, shape, wall_margin: float = 1.0) -> bool:
    """True iff any shape point is outside the lumen or within wall_margin of it."""
    if wall_margin < 0:
        raise ValueError("wall_margin must be >= 0")
    pts = shape.points if hasattr(shape, "points") else np.asarray(shape)
    signed = model.signed_distances(pts)
    return bool(np.any(signed > -wall_margin))

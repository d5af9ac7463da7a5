"""Procedural right-heart phantom: SVC tube into atrium and ventricle spheres.

Desk-scale stand-in for patient anatomy. The lumen is the union of a capped
cylinder (superior vena cava) and two spheres (right atrium, right
ventricle) that intersect in a circle of the requested annulus radius; the
tricuspid centerline through that circle is returned as the valve target.
Meshing goes through marching cubes on the exact union SDF, which keeps the
surface watertight and leaves the SDF available as an analytic oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage import measure

from .heart import HeartModel, Pose, ValveTarget
from .primitives import sdf_capped_cylinder_z, sdf_sphere
from .trimesh_io import TriangleMesh


@dataclass(frozen=True)
class PhantomSpec:
    """All lengths mm, angle degrees. Defaults give a comfortably reachable
    annulus about 40 degrees off the SVC axis."""

    svc_radius: float = 12.0
    svc_length: float = 80.0
    atrium_radius: float = 40.0
    ventricle_radius: float = 35.0
    annulus_radius: float = 15.0
    annulus_offset_angle: float = 40.0
    annulus_thickness: float = 6.0
    voxel_mm: float = 1.5

    def validate(self) -> None:
        for name in ("svc_radius", "svc_length", "atrium_radius",
                     "ventricle_radius", "annulus_radius", "annulus_thickness",
                     "voxel_mm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.annulus_radius >= self.atrium_radius:
            raise ValueError("annulus_radius must be smaller than atrium_radius")
        if self.annulus_radius >= self.ventricle_radius:
            raise ValueError("annulus_radius must be smaller than ventricle_radius")
        if self.svc_radius >= self.atrium_radius:
            raise ValueError("svc_radius must be smaller than atrium_radius "
                             "(tube would not open into the atrium)")
        if not 0.0 < self.annulus_offset_angle < 90.0:
            raise ValueError("annulus_offset_angle must be in (0, 90) degrees")


@dataclass(frozen=True)
class PhantomGeometry:
    """Analytic layout derived from a PhantomSpec (the containment oracle)."""

    spec: PhantomSpec
    atrium_center: np.ndarray
    ventricle_center: np.ndarray
    annulus_center: np.ndarray
    annulus_axis: np.ndarray
    tube_z0: float
    tube_z1: float

    def sdf(self, points: np.ndarray) -> np.ndarray:
        s = self.spec
        return np.minimum.reduce([
            sdf_capped_cylinder_z(points, s.svc_radius, self.tube_z0, self.tube_z1),
            sdf_sphere(points, self.atrium_center, s.atrium_radius),
            sdf_sphere(points, self.ventricle_center, s.ventricle_radius),
        ])


def phantom_geometry(spec: PhantomSpec) -> PhantomGeometry:
    spec.validate()
    s = spec
    # tube opens into the atrium: sphere center sits past the tube end so the
    # end circle of radius svc_radius lies on the sphere
    az = s.svc_length + np.sqrt(s.atrium_radius**2 - s.svc_radius**2)
    atrium = np.array([0.0, 0.0, az])
    theta = np.deg2rad(s.annulus_offset_angle)
    u = np.array([np.sin(theta), 0.0, np.cos(theta)])
    # sphere-sphere intersection circle of radius annulus_radius
    a = np.sqrt(s.atrium_radius**2 - s.annulus_radius**2)
    b = np.sqrt(s.ventricle_radius**2 - s.annulus_radius**2)
    ventricle = atrium + (a + b) * u
    annulus_center = atrium + a * u
    return PhantomGeometry(
        spec=spec,
        atrium_center=atrium,
        ventricle_center=ventricle,
        annulus_center=annulus_center,
        annulus_axis=u,
        tube_z0=-s.svc_radius,  # lumen continues behind the port
        tube_z1=az,             # submerged into the atrium for a smooth union
    )


def synthesize_phantom(spec: PhantomSpec = PhantomSpec()) -> tuple[HeartModel, ValveTarget]:
    """Mesh the phantom lumen and return it with its valve target.

    Deterministic for a given spec. The insertion port is the origin with
    the advance axis +z.
    """
    geom = phantom_geometry(spec)
    s = spec
    pad = 4.0 * s.voxel_mm
    lo = np.array([
        min(-s.svc_radius, geom.ventricle_center[0] - s.ventricle_radius,
            -s.atrium_radius) - pad,
        -max(s.atrium_radius, s.ventricle_radius) - pad,
        geom.tube_z0 - pad,
    ])
    hi = np.array([
        max(s.svc_radius, geom.atrium_center[0] + s.atrium_radius,
            geom.ventricle_center[0] + s.ventricle_radius) + pad,
        max(s.atrium_radius, s.ventricle_radius) + pad,
        geom.ventricle_center[2] + s.ventricle_radius + pad,
    ])
    shape = np.maximum(np.ceil((hi - lo) / s.voxel_mm).astype(int) + 1, 2)
    # irrational grid offset: flat faces at round coordinates must not land
    # exactly on grid planes or marching cubes emits degenerate triangles
    lo = lo - s.voxel_mm * (np.sqrt(2.0) - 1.0)
    xs = lo[0] + s.voxel_mm * np.arange(shape[0])
    ys = lo[1] + s.voxel_mm * np.arange(shape[1])
    zs = lo[2] + s.voxel_mm * np.arange(shape[2])
    grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
    sdf = geom.sdf(grid.reshape(-1, 3)).reshape(grid.shape[:3])
    if sdf.min() >= 0:
        raise ValueError("phantom spec yields an empty lumen")

    verts, faces, _, _ = measure.marching_cubes(
        sdf, level=0.0, spacing=(s.voxel_mm,) * 3
    )
    verts = verts + lo
    # marching_cubes on an SDF (inside-negative) winds inward; flip to outward
    mesh = TriangleMesh(verts, faces[:, ::-1])
    mesh.validate_closed()

    model = HeartModel(
        mesh=mesh,
        insertion_port=Pose(np.zeros(3), np.array([0.0, 0.0, 1.0])),
    )
    half = 0.5 * s.annulus_thickness * geom.annulus_axis
    target = ValveTarget(p1=geom.annulus_center - half, p2=geom.annulus_center + half)
    target.validate_inside(model)
    return model, target

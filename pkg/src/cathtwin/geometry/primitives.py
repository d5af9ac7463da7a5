"""Analytic test geometry: unit cube, icosphere, primitive SDFs."""
from __future__ import annotations

import numpy as np

from .trimesh_io import TriangleMesh


def unit_cube() -> TriangleMesh:
    """Closed cube [0,1]^3, outward-facing winding."""
    v = np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
         [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        dtype=np.float64,
    )
    f = np.array(
        [[0, 2, 1], [0, 3, 2],   # z=0, normal -z
         [4, 5, 6], [4, 6, 7],   # z=1, normal +z
         [0, 1, 5], [0, 5, 4],   # y=0, normal -y
         [3, 7, 6], [3, 6, 2],   # y=1, normal +y
         [0, 4, 7], [0, 7, 3],   # x=0, normal -x
         [1, 2, 6], [1, 6, 5]],  # x=1, normal +x
        dtype=np.int64,
    )
    return TriangleMesh(v, f)


def icosphere(radius: float = 1.0, center=(0.0, 0.0, 0.0), subdivisions: int = 4) -> TriangleMesh:
    """Subdivided icosahedron projected onto a sphere."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]],
        dtype=np.int64,
    )
    verts = list(verts)
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                m /= np.linalg.norm(m)
                verts.append(m)
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.asarray(new_faces, dtype=np.int64)
    v = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(v, faces)


# --- primitive signed distance fields (exact, used as oracles) -------------

def sdf_sphere(points: np.ndarray, center, radius: float) -> np.ndarray:
    p = np.atleast_2d(points) - np.asarray(center, dtype=np.float64)
    return np.linalg.norm(p, axis=1) - radius


def sdf_capped_cylinder_z(points: np.ndarray, radius: float, z0: float, z1: float) -> np.ndarray:
    """Cylinder along z with flat caps at z0 < z1, axis through x=y=0."""
    p = np.atleast_2d(points)
    d_rad = np.hypot(p[:, 0], p[:, 1]) - radius
    d_z = np.maximum(z0 - p[:, 2], p[:, 2] - z1)
    outside = np.sqrt(np.maximum(d_rad, 0.0) ** 2 + np.maximum(d_z, 0.0) ** 2)
    inside = np.minimum(np.maximum(d_rad, d_z), 0.0)
    return outside + inside

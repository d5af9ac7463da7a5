"""Triangle mesh container, STL/OBJ parsing and watertightness validation.

Meshes are stored as welded vertex/face arrays in millimeters. Only
triangles are supported; OBJ faces with more than three vertices are
rejected rather than fan-triangulated.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeshError",
    "TriangleMesh",
    "load_mesh_bytes",
    "write_stl_binary",
]


class MeshError(ValueError):
    """Raised for unparseable, degenerate or non-watertight meshes."""


@dataclass(frozen=True)
class TriangleMesh:
    """Welded, indexed triangle mesh (vertices in mm)."""

    vertices: np.ndarray  # (nv, 3) float64
    faces: np.ndarray     # (nf, 3) int64

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def triangles(self) -> np.ndarray:
        """(nf, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    @property
    def bounds(self) -> np.ndarray:
        """(2, 3) axis-aligned min/max corners."""
        return np.vstack([self.vertices.min(axis=0), self.vertices.max(axis=0)])

    def face_areas(self) -> np.ndarray:
        t = self.triangles
        return 0.5 * np.linalg.norm(
            np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1
        )

    def scaled(self, factor: float) -> "TriangleMesh":
        return TriangleMesh(self.vertices * float(factor), self.faces)

    def open_edge_count(self) -> int:
        """Number of undirected edges referenced by exactly one triangle."""
        counts = _undirected_edge_counts(self.faces)
        return int(np.count_nonzero(counts == 1))

    def validate_closed(self, area_eps: float = 1e-12) -> None:
        """Check the mesh is closed and consistently oriented.

        Every undirected edge must be shared by exactly two triangles and the
        two incident triangles must traverse it in opposite directions.
        Raises MeshError with the open-edge count otherwise.
        """
        if len(self.faces) == 0:
            raise MeshError("empty mesh")
        degenerate = int(np.count_nonzero(self.face_areas() < area_eps))
        if degenerate:
            raise MeshError(f"{degenerate} degenerate triangles")
        counts = _undirected_edge_counts(self.faces)
        n_open = int(np.count_nonzero(counts == 1))
        if n_open:
            raise MeshError(f"non-watertight: {n_open} open edges")
        if np.any(counts != 2):
            raise MeshError("non-manifold: edge shared by more than 2 triangles")
        directed = _directed_edge_keys(self.faces)
        if len(np.unique(directed)) != len(directed):
            raise MeshError("inconsistent triangle orientation")


def _directed_edge_keys(faces: np.ndarray) -> np.ndarray:
    edges = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    ).astype(np.int64)
    return edges[:, 0] * (faces.max() + 1) + edges[:, 1]


def _undirected_edge_counts(faces: np.ndarray) -> np.ndarray:
    edges = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    ).astype(np.int64)
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    keys = lo * (faces.max() + 1) + hi
    _, counts = np.unique(keys, return_counts=True)
    return counts


def weld_vertices(vertices: np.ndarray, faces: np.ndarray) -> TriangleMesh:
    """Merge exactly-equal vertices (STL stores each corner per facet)."""
    v = np.ascontiguousarray(vertices, dtype=np.float64)
    keys = v.view([("x", np.float64), ("y", np.float64), ("z", np.float64)]).ravel()
    uniq, inverse = np.unique(keys, return_inverse=True)
    welded = uniq.view(np.float64).reshape(-1, 3)
    return TriangleMesh(welded, inverse[np.asarray(faces, dtype=np.int64)])


# ---------------------------------------------------------------------------
# parsing

def load_mesh_bytes(data: bytes, unit_scale: float = 1.0) -> TriangleMesh:
    """Parse STL (binary or ASCII) or OBJ bytes into a welded mesh.

    unit_scale multiplies all coordinates (e.g. 10.0 for cm -> mm).
    """
    if unit_scale <= 0:
        raise MeshError(f"unit_scale must be > 0, got {unit_scale}")
    if not data:
        raise MeshError("empty mesh document")
    head = data[:512].lstrip()
    if head[:1] in (b"v", b"#", b"o", b"g", b"m") and b"\nf " in data or head[:2] == b"v ":
        mesh = _parse_obj(data)
    elif head.startswith(b"solid") and b"facet" in data[:4096]:
        mesh = _parse_stl_ascii(data)
    else:
        mesh = _parse_stl_binary(data)
    if unit_scale != 1.0:
        mesh = mesh.scaled(unit_scale)
    return mesh


def _parse_stl_binary(data: bytes) -> TriangleMesh:
    if len(data) < 84:
        raise MeshError("binary STL too short")
    (n,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * n
    if len(data) < expected:
        raise MeshError(f"binary STL truncated: expected {expected} bytes, got {len(data)}")
    raw = np.frombuffer(data, dtype=np.uint8, count=50 * n, offset=84)
    tri = raw.reshape(n, 50)[:, 12:48].copy().view("<f4").reshape(n, 3, 3)
    verts = tri.reshape(-1, 3).astype(np.float64)
    faces = np.arange(3 * n, dtype=np.int64).reshape(n, 3)
    return weld_vertices(verts, faces)


def _parse_stl_ascii(data: bytes) -> TriangleMesh:
    verts = []
    for line in data.decode("ascii", errors="replace").splitlines():
        parts = line.split()
        if parts and parts[0] == "vertex":
            if len(parts) != 4:
                raise MeshError(f"bad STL vertex line: {line!r}")
            verts.append([float(p) for p in parts[1:]])
    if not verts or len(verts) % 3:
        raise MeshError("ASCII STL: vertex count not a multiple of 3")
    verts = np.asarray(verts, dtype=np.float64)
    faces = np.arange(len(verts), dtype=np.int64).reshape(-1, 3)
    return weld_vertices(verts, faces)


def _parse_obj(data: bytes) -> TriangleMesh:
    verts = []
    faces = []
    for lineno, line in enumerate(data.decode("utf-8", errors="replace").splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            idx = [p.split("/")[0] for p in parts[1:]]
            if len(idx) != 3:
                raise MeshError(f"OBJ line {lineno}: only triangle faces supported")
            faces.append([int(i) - 1 if int(i) > 0 else len(verts) + int(i) for i in idx])
    if not verts or not faces:
        raise MeshError("OBJ: no triangles found")
    return TriangleMesh(np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64))


def write_stl_binary(mesh: TriangleMesh, header: str = "cathtwin") -> bytes:
    """Serialize to binary STL (normals recomputed from winding)."""
    t = mesh.triangles.astype(np.float32)
    n = len(t)
    normals = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = np.divide(normals, lens, out=np.zeros_like(normals), where=lens > 0)
    body = np.zeros((n, 50), dtype=np.uint8)
    body[:, 0:12] = normals.astype("<f4").view(np.uint8).reshape(n, 12)
    body[:, 12:48] = t.reshape(n, 9).astype("<f4").view(np.uint8).reshape(n, 36)
    head = header.encode()[:80].ljust(80, b"\0")
    return head + struct.pack("<I", n) + body.tobytes()

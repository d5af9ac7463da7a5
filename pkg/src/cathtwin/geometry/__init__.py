from .backend import active_backend, compiled_available, make_query
from .heart import (
    ContainmentResult,
    HeartModel,
    Pose,
    ValveTarget,
    collision,
    containment_query,
    load_heart_model,
)
from .phantom import PhantomGeometry, PhantomSpec, phantom_geometry, synthesize_phantom
from .trimesh_io import MeshError, TriangleMesh, load_mesh_bytes, write_stl_binary

__all__ = [
    "ContainmentResult",
    "HeartModel",
    "MeshError",
    "PhantomGeometry",
    "PhantomSpec",
    "Pose",
    "TriangleMesh",
    "ValveTarget",
    "active_backend",
    "collision",
    "compiled_available",
    "containment_query",
    "load_heart_model",
    "load_mesh_bytes",
    "make_query",
    "phantom_geometry",
    "synthesize_phantom",
    "write_stl_binary",
]

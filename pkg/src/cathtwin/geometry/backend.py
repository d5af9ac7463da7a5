"""Query backend selection: compiled kernel when built, NumPy fallback otherwise.

Set CATHTWIN_PURE=1 to force the fallback (used by the benchmark and tests).
"""
from __future__ import annotations

import os

import numpy as np

from .bvh import RAY_DIRECTIONS, BvhArrays, PureBvhQuery, build_bvh

try:
    from . import _bvhquery  # type: ignore[attr-defined]
except ImportError:
    _bvhquery = None


def compiled_available() -> bool:
    return _bvhquery is not None


def active_backend() -> str:
    if os.environ.get("CATHTWIN_PURE") == "1" or _bvhquery is None:
        return "pure"
    return "compiled"


class _CompiledBvhQuery:
    name = "compiled"

    def __init__(self, arrays: BvhArrays):
        self.a = arrays

    def nearest(self, points):
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        a = self.a
        return _bvhquery.nearest(
            a.node_min, a.node_max, a.node_left, a.node_right,
            a.node_start, a.node_count, a.tri_order, a.triangles, pts,
        )

    def inside(self, points):
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        a = self.a
        return _bvhquery.inside(
            a.node_min, a.node_max, a.node_left, a.node_right,
            a.node_start, a.node_count, a.triangles, pts, RAY_DIRECTIONS,
        )


def make_query(triangles: np.ndarray, force: str | None = None):
    """Build a BVH and wrap it in the selected query backend."""
    arrays = build_bvh(triangles)
    backend = force or active_backend()
    if backend == "compiled":
        if _bvhquery is None:
            raise RuntimeError("compiled kernel requested but not built")
        return _CompiledBvhQuery(arrays)
    return PureBvhQuery(arrays)

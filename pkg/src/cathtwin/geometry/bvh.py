"""Axis-aligned BVH over triangles with point queries.

The tree is built once per mesh into flat NumPy arrays so the same layout
feeds both the compiled query kernel and the pure-Python traversal here.
Distance queries use Ericson's closest-point-on-triangle; containment uses
ray parity with a fixed ladder of fallback directions for grazing hits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LEAF_SIZE = 8

# Irrational-ish ray directions: axis-aligned rays graze flat meshes too often.
RAY_DIRECTIONS = np.array(
    [
        [0.8014821, 0.3912574, 0.4521214],
        [-0.2936871, 0.8719426, 0.3915325],
        [0.3376844, -0.2847293, 0.8971347],
        [-0.7249438, -0.5749252, 0.3789414],
        [0.5086427, 0.4918214, -0.7066392],
        [-0.3741923, 0.6273641, -0.6829157],
        [0.9063462, -0.3952745, -0.1491835],
        [-0.1625943, -0.8079214, -0.5664289],
    ],
    dtype=np.float64,
)
RAY_DIRECTIONS /= np.linalg.norm(RAY_DIRECTIONS, axis=1, keepdims=True)


@dataclass(frozen=True)
class BvhArrays:
    """Flat BVH node arrays plus the reordered triangle soup."""

    node_min: np.ndarray   # (m, 3) f64
    node_max: np.ndarray   # (m, 3) f64
    node_left: np.ndarray  # (m,) i32, -1 for leaf
    node_right: np.ndarray  # (m,) i32
    node_start: np.ndarray  # (m,) i32 into tri_order
    node_count: np.ndarray  # (m,) i32, 0 for internal nodes
    tri_order: np.ndarray   # (n,) i32 original triangle index
    triangles: np.ndarray   # (n, 3, 3) f64 in traversal order


def build_bvh(triangles: np.ndarray) -> BvhArrays:
    tris = np.ascontiguousarray(triangles, dtype=np.float64)
    n = len(tris)
    if n == 0:
        raise ValueError("cannot build BVH over empty triangle set")
    lo = tris.min(axis=1)
    hi = tris.max(axis=1)
    centroids = 0.5 * (lo + hi)

    order = np.arange(n, dtype=np.int32)
    node_min, node_max = [], []
    node_left, node_right, node_start, node_count = [], [], [], []

    def new_node():
        node_min.append(np.zeros(3))
        node_max.append(np.zeros(3))
        node_left.append(-1)
        node_right.append(-1)
        node_start.append(0)
        node_count.append(0)
        return len(node_left) - 1

    root = new_node()
    stack = [(root, 0, n)]
    while stack:
        idx, start, end = stack.pop()
        seg = order[start:end]
        node_min[idx] = lo[seg].min(axis=0)
        node_max[idx] = hi[seg].max(axis=0)
        if end - start <= _LEAF_SIZE:
            node_start[idx] = start
            node_count[idx] = end - start
            continue
        extent = node_max[idx] - node_min[idx]
        axis = int(np.argmax(extent))
        local = np.argsort(centroids[seg, axis], kind="stable")
        order[start:end] = seg[local]
        mid = start + (end - start) // 2
        left = new_node()
        right = new_node()
        node_left[idx] = left
        node_right[idx] = right
        stack.append((left, start, mid))
        stack.append((right, mid, end))

    return BvhArrays(
        node_min=np.ascontiguousarray(node_min, dtype=np.float64),
        node_max=np.ascontiguousarray(node_max, dtype=np.float64),
        node_left=np.asarray(node_left, dtype=np.int32),
        node_right=np.asarray(node_right, dtype=np.int32),
        node_start=np.asarray(node_start, dtype=np.int32),
        node_count=np.asarray(node_count, dtype=np.int32),
        tri_order=order,
        triangles=np.ascontiguousarray(tris[order]),
    )


# ---------------------------------------------------------------------------
# scalar helpers (mirrored in the compiled kernel)

def closest_point_on_triangle(a, b, c, p):
    """Ericson, Real-Time Collision Detection sec. 5.1.5."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = ab @ ap
    d2 = ac @ ap
    if d1 <= 0.0 and d2 <= 0.0:
        return a
    bp = p - b
    d3 = ab @ bp
    d4 = ac @ bp
    if d3 >= 0.0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        return a + (d1 / (d1 - d3)) * ab
    cp = p - c
    d5 = ab @ cp
    d6 = ac @ cp
    if d6 >= 0.0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        return a + (d2 / (d2 - d6)) * ac
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b)
    denom = 1.0 / (va + vb + vc)
    return a + ab * (vb * denom) + ac * (vc * denom)


def _aabb_sqdist(nmin, nmax, p):
    d = np.maximum(nmin - p, 0.0) + np.maximum(p - nmax, 0.0)
    return d @ d


def _ray_hits_aabb(nmin, nmax, origin, inv_dir):
    t1 = (nmin - origin) * inv_dir
    t2 = (nmax - origin) * inv_dir
    tmin = np.minimum(t1, t2).max()
    tmax = np.maximum(t1, t2).min()
    return tmax >= max(tmin, 0.0)


class PureBvhQuery:
    """Reference traversal used when the compiled kernel is unavailable."""

    name = "pure"

    def __init__(self, arrays: BvhArrays):
        self.a = arrays

    def nearest(self, points: np.ndarray):
        """Unsigned distance and original triangle index per point."""
        a = self.a
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dist = np.empty(len(pts))
        tri = np.empty(len(pts), dtype=np.int64)
        for k, p in enumerate(pts):
            best = np.inf
            best_t = -1
            stack = [0]
            while stack:
                ni = stack.pop()
                if _aabb_sqdist(a.node_min[ni], a.node_max[ni], p) >= best:
                    continue
                cnt = a.node_count[ni]
                if cnt > 0:
                    s = a.node_start[ni]
                    for j in range(s, s + cnt):
                        t = a.triangles[j]
                        q = closest_point_on_triangle(t[0], t[1], t[2], p)
                        d2 = (p - q) @ (p - q)
                        if d2 < best:
                            best = d2
                            best_t = j
                else:
                    l, r = a.node_left[ni], a.node_right[ni]
                    dl = _aabb_sqdist(a.node_min[l], a.node_max[l], p)
                    dr = _aabb_sqdist(a.node_min[r], a.node_max[r], p)
                    # near child last so it pops first
                    if dl < dr:
                        stack.append(r)
                        stack.append(l)
                    else:
                        stack.append(l)
                        stack.append(r)
            dist[k] = np.sqrt(best)
            tri[k] = a.tri_order[best_t]
        return dist, tri

    def inside(self, points: np.ndarray):
        """Ray-parity containment; re-casts on grazing intersections."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.zeros(len(pts), dtype=bool)
        for k, p in enumerate(pts):
            for d in RAY_DIRECTIONS:
                crossings, clean = self._count_crossings(p, d)
                if clean:
                    out[k] = bool(crossings & 1)
                    break
            else:
                out[k] = bool(crossings & 1)
        return out

    def _count_crossings(self, origin, direction):
        a = self.a
        with np.errstate(divide="ignore"):
            inv = 1.0 / direction
        crossings = 0
        clean = True
        stack = [0]
        while stack:
            ni = stack.pop()
            if not _ray_hits_aabb(a.node_min[ni], a.node_max[ni], origin, inv):
                continue
            cnt = a.node_count[ni]
            if cnt > 0:
                s = a.node_start[ni]
                for j in range(s, s + cnt):
                    hit, grazing = _ray_triangle(origin, direction, a.triangles[j])
                    if grazing:
                        clean = False
                    crossings += hit
            else:
                stack.append(a.node_left[ni])
                stack.append(a.node_right[ni])
        return crossings, clean


def _ray_triangle(origin, direction, tri, eps=1e-10):
    """Moller-Trumbore; flags hits too close to an edge, vertex or the origin."""
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    h = np.cross(direction, e2)
    det = e1 @ h
    if abs(det) < 1e-14:
        return 0, False
    inv = 1.0 / det
    s = origin - tri[0]
    u = (s @ h) * inv
    if u < -eps or u > 1.0 + eps:
        return 0, False
    q = np.cross(s, e1)
    v = (direction @ q) * inv
    if v < -eps or u + v > 1.0 + eps:
        return 0, False
    t = (e2 @ q) * inv
    if t <= eps:
        # behind or starting on the surface
        return 0, bool(t > -eps)
    grazing = u < eps or v < eps or u + v > 1.0 - eps
    return 1, grazing

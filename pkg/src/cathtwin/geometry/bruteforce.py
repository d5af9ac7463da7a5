"""Exhaustive all-triangle point queries.

Independent of the BVH path on purpose: tests compare both backends against
these. Vectorized over triangles, looped over points.
"""
from __future__ import annotations

import numpy as np


def closest_sqdist_all(triangles: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Squared point-triangle distance to every triangle (Ericson, vectorized)."""
    a = triangles[:, 0]
    ab = triangles[:, 1] - a
    ac = triangles[:, 2] - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - triangles[:, 1]
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - triangles[:, 2]
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.clip(d1 / (d1 - d3), 0.0, 1.0)
        w_ac = np.clip(d2 / (d2 - d6), 0.0, 1.0)
        w_bc = np.clip((d4 - d3) / ((d4 - d3) + (d5 - d6)), 0.0, 1.0)
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom

    q = a + v_in[:, None] * ab + w_in[:, None] * ac  # interior default
    reg_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    q = np.where(reg_bc[:, None],
                 triangles[:, 1] + w_bc[:, None] * (triangles[:, 2] - triangles[:, 1]), q)
    reg_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    q = np.where(reg_ac[:, None], a + w_ac[:, None] * ac, q)
    reg_c = (d6 >= 0) & (d5 <= d6)
    q = np.where(reg_c[:, None], triangles[:, 2], q)
    reg_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    q = np.where(reg_ab[:, None], a + v_ab[:, None] * ab, q)
    reg_b = (d3 >= 0) & (d4 <= d3)
    q = np.where(reg_b[:, None], triangles[:, 1], q)
    reg_a = (d1 <= 0) & (d2 <= 0)
    q = np.where(reg_a[:, None], a, q)
    d = p - q
    return np.einsum("ij,ij->i", d, d)


def brute_distance(triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(points)
    return np.array([np.sqrt(closest_sqdist_all(triangles, p).min()) for p in pts])


def brute_inside(triangles: np.ndarray, points: np.ndarray,
                 direction=(0.8014821, 0.3912574, 0.4521214)) -> np.ndarray:
    """Parity against every triangle with a single fixed ray direction."""
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    pts = np.atleast_2d(points)
    e1 = triangles[:, 1] - triangles[:, 0]
    e2 = triangles[:, 2] - triangles[:, 0]
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > 1e-14
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    out = np.zeros(len(pts), dtype=bool)
    for k, p in enumerate(pts):
        s = p - triangles[:, 0]
        u = np.einsum("ij,ij->i", s, h) * inv
        q = np.cross(s, e1)
        v = (q @ d) * inv
        t = np.einsum("ij,ij->i", e2, q) * inv
        hit = ok & (u >= 0) & (u <= 1) & (v >= 0) & (u + v <= 1) & (t > 1e-10)
        out[k] = bool(hit.sum() & 1)
    return out

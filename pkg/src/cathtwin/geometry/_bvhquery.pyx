# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled BVH point queries (nearest triangle + ray-parity containment).

Mirrors the pure-Python traversal in bvh.py; both must return identical
results on the same BvhArrays input.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

cdef double INF = float("inf")


cdef inline double _clamp0(double x) nogil:
    return x if x > 0.0 else 0.0


cdef double _aabb_sqdist(const double[:, ::1] nmin, const double[:, ::1] nmax,
                         int ni, const double* p) nogil:
    cdef double d, acc = 0.0
    cdef int i
    for i in range(3):
        d = _clamp0(nmin[ni, i] - p[i]) + _clamp0(p[i] - nmax[ni, i])
        acc += d * d
    return acc


cdef double _tri_sqdist(const double[:, :, ::1] tris, int j, const double* p) nogil:
    """Ericson closest point on triangle, returns squared distance."""
    cdef double a0 = tris[j, 0, 0], a1 = tris[j, 0, 1], a2 = tris[j, 0, 2]
    cdef double ab0 = tris[j, 1, 0] - a0, ab1 = tris[j, 1, 1] - a1, ab2 = tris[j, 1, 2] - a2
    cdef double ac0 = tris[j, 2, 0] - a0, ac1 = tris[j, 2, 1] - a1, ac2 = tris[j, 2, 2] - a2
    cdef double ap0 = p[0] - a0, ap1 = p[1] - a1, ap2 = p[2] - a2
    cdef double d1 = ab0 * ap0 + ab1 * ap1 + ab2 * ap2
    cdef double d2 = ac0 * ap0 + ac1 * ap1 + ac2 * ap2
    cdef double qx, qy, qz, v, w, d3, d4, d5, d6, vc, vb, va, denom
    cdef double bp0, bp1, bp2, cp0, cp1, cp2

    if d1 <= 0.0 and d2 <= 0.0:
        qx = a0; qy = a1; qz = a2
    else:
        bp0 = p[0] - tris[j, 1, 0]; bp1 = p[1] - tris[j, 1, 1]; bp2 = p[2] - tris[j, 1, 2]
        d3 = ab0 * bp0 + ab1 * bp1 + ab2 * bp2
        d4 = ac0 * bp0 + ac1 * bp1 + ac2 * bp2
        if d3 >= 0.0 and d4 <= d3:
            qx = tris[j, 1, 0]; qy = tris[j, 1, 1]; qz = tris[j, 1, 2]
        else:
            vc = d1 * d4 - d3 * d2
            if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                v = d1 / (d1 - d3)
                qx = a0 + v * ab0; qy = a1 + v * ab1; qz = a2 + v * ab2
            else:
                cp0 = p[0] - tris[j, 2, 0]; cp1 = p[1] - tris[j, 2, 1]; cp2 = p[2] - tris[j, 2, 2]
                d5 = ab0 * cp0 + ab1 * cp1 + ab2 * cp2
                d6 = ac0 * cp0 + ac1 * cp1 + ac2 * cp2
                if d6 >= 0.0 and d5 <= d6:
                    qx = tris[j, 2, 0]; qy = tris[j, 2, 1]; qz = tris[j, 2, 2]
                else:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                        w = d2 / (d2 - d6)
                        qx = a0 + w * ac0; qy = a1 + w * ac1; qz = a2 + w * ac2
                    else:
                        va = d3 * d6 - d5 * d4
                        if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
                            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                            qx = tris[j, 1, 0] + w * (tris[j, 2, 0] - tris[j, 1, 0])
                            qy = tris[j, 1, 1] + w * (tris[j, 2, 1] - tris[j, 1, 1])
                            qz = tris[j, 1, 2] + w * (tris[j, 2, 2] - tris[j, 1, 2])
                        else:
                            denom = 1.0 / (va + vb + vc)
                            v = vb * denom
                            w = vc * denom
                            qx = a0 + ab0 * v + ac0 * w
                            qy = a1 + ab1 * v + ac1 * w
                            qz = a2 + ab2 * v + ac2 * w
    cdef double dx = p[0] - qx, dy = p[1] - qy, dz = p[2] - qz
    return dx * dx + dy * dy + dz * dz


def nearest(const double[:, ::1] node_min, const double[:, ::1] node_max,
            const int[::1] node_left, const int[::1] node_right,
            const int[::1] node_start, const int[::1] node_count,
            const int[::1] tri_order, const double[:, :, ::1] triangles,
            const double[:, ::1] points):
    cdef Py_ssize_t npts = points.shape[0]
    dist_arr = np.empty(npts, dtype=np.float64)
    tri_arr = np.empty(npts, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] tri = tri_arr
    cdef int[::1] stack = np.empty(node_left.shape[0] + 2, dtype=np.int32)
    cdef Py_ssize_t k
    cdef int top, ni, l, r, j, s, cnt, best_t
    cdef double best, d2, dl, dr
    cdef double p[3]

    with nogil:
        for k in range(npts):
            p[0] = points[k, 0]; p[1] = points[k, 1]; p[2] = points[k, 2]
            best = INF
            best_t = -1
            top = 0
            stack[top] = 0
            top += 1
            while top > 0:
                top -= 1
                ni = stack[top]
                if _aabb_sqdist(node_min, node_max, ni, p) >= best:
                    continue
                cnt = node_count[ni]
                if cnt > 0:
                    s = node_start[ni]
                    for j in range(s, s + cnt):
                        d2 = _tri_sqdist(triangles, j, p)
                        if d2 < best:
                            best = d2
                            best_t = j
                else:
                    l = node_left[ni]
                    r = node_right[ni]
                    dl = _aabb_sqdist(node_min, node_max, l, p)
                    dr = _aabb_sqdist(node_min, node_max, r, p)
                    if dl < dr:
                        stack[top] = r; top += 1
                        stack[top] = l; top += 1
                    else:
                        stack[top] = l; top += 1
                        stack[top] = r; top += 1
            dist[k] = sqrt(best)
            tri[k] = tri_order[best_t]
    return dist_arr, tri_arr


cdef int _ray_triangle(const double[:, :, ::1] tris, int j, const double* o,
                       const double* d, double eps, int* grazing) nogil:
    cdef double e10 = tris[j, 1, 0] - tris[j, 0, 0]
    cdef double e11 = tris[j, 1, 1] - tris[j, 0, 1]
    cdef double e12 = tris[j, 1, 2] - tris[j, 0, 2]
    cdef double e20 = tris[j, 2, 0] - tris[j, 0, 0]
    cdef double e21 = tris[j, 2, 1] - tris[j, 0, 1]
    cdef double e22 = tris[j, 2, 2] - tris[j, 0, 2]
    cdef double h0 = d[1] * e22 - d[2] * e21
    cdef double h1 = d[2] * e20 - d[0] * e22
    cdef double h2 = d[0] * e21 - d[1] * e20
    cdef double det = e10 * h0 + e11 * h1 + e12 * h2
    if fabs(det) < 1e-14:
        return 0
    cdef double inv = 1.0 / det
    cdef double s0 = o[0] - tris[j, 0, 0]
    cdef double s1 = o[1] - tris[j, 0, 1]
    cdef double s2 = o[2] - tris[j, 0, 2]
    cdef double u = (s0 * h0 + s1 * h1 + s2 * h2) * inv
    if u < -eps or u > 1.0 + eps:
        return 0
    cdef double q0 = s1 * e12 - s2 * e11
    cdef double q1 = s2 * e10 - s0 * e12
    cdef double q2 = s0 * e11 - s1 * e10
    cdef double v = (d[0] * q0 + d[1] * q1 + d[2] * q2) * inv
    if v < -eps or u + v > 1.0 + eps:
        return 0
    cdef double t = (e20 * q0 + e21 * q1 + e22 * q2) * inv
    if t <= eps:
        if t > -eps:
            grazing[0] = 1
        return 0
    if u < eps or v < eps or u + v > 1.0 - eps:
        grazing[0] = 1
    return 1


cdef int _ray_hits_aabb(const double[:, ::1] nmin, const double[:, ::1] nmax,
                        int ni, const double* o, const double* inv) nogil:
    cdef double tmin = -INF, tmax = INF, t1, t2
    cdef int i
    for i in range(3):
        t1 = (nmin[ni, i] - o[i]) * inv[i]
        t2 = (nmax[ni, i] - o[i]) * inv[i]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmin < 0.0:
        tmin = 0.0
    return tmax >= tmin


def inside(const double[:, ::1] node_min, const double[:, ::1] node_max,
           const int[::1] node_left, const int[::1] node_right,
           const int[::1] node_start, const int[::1] node_count,
           const double[:, :, ::1] triangles,
           const double[:, ::1] points, const double[:, ::1] directions):
    cdef Py_ssize_t npts = points.shape[0]
    out_arr = np.zeros(npts, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef int[::1] stack = np.empty(node_left.shape[0] + 2, dtype=np.int32)
    cdef Py_ssize_t k
    cdef int top, ni, j, s, cnt, di, crossings, grazing
    cdef double o[3]
    cdef double d[3]
    cdef double inv[3]
    cdef int i

    with nogil:
        for k in range(npts):
            o[0] = points[k, 0]; o[1] = points[k, 1]; o[2] = points[k, 2]
            crossings = 0
            for di in range(directions.shape[0]):
                d[0] = directions[di, 0]; d[1] = directions[di, 1]; d[2] = directions[di, 2]
                for i in range(3):
                    inv[i] = 1.0 / d[i] if d[i] != 0.0 else INF
                crossings = 0
                grazing = 0
                top = 0
                stack[top] = 0
                top += 1
                while top > 0:
                    top -= 1
                    ni = stack[top]
                    if not _ray_hits_aabb(node_min, node_max, ni, o, inv):
                        continue
                    cnt = node_count[ni]
                    if cnt > 0:
                        s = node_start[ni]
                        for j in range(s, s + cnt):
                            crossings += _ray_triangle(triangles, j, o, d, 1e-10, &grazing)
                    else:
                        stack[top] = node_left[ni]; top += 1
                        stack[top] = node_right[ni]; top += 1
                if grazing == 0:
                    break
            out[k] = crossings & 1
    return out_arr.astype(bool)

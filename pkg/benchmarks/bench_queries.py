#!/usr/bin/env python3
"""Compiled-vs-pure benchmark for the mesh query kernel.

Collision checks (100-point shapes against the lumen BVH) dominate RL
training time, so this is the hot path the Cython extension exists for.

    python benchmarks/bench_queries.py [--points 2000]
"""
import argparse
import time

import numpy as np

from cathtwin.catheter import JointState, RigGeometry, forward_kinematics
from cathtwin.geometry import collision, compiled_available, make_query, synthesize_phantom
from cathtwin.geometry.heart import HeartModel


def time_queries(query, pts, repeats=3):
    best_n = np.inf
    best_i = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        query.nearest(pts)
        best_n = min(best_n, time.perf_counter() - t0)
        t0 = time.perf_counter()
        query.inside(pts)
        best_i = min(best_i, time.perf_counter() - t0)
    return best_n, best_i


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--points", type=int, default=2000)
    parser.add_argument("--collisions", type=int, default=50)
    args = parser.parse_args()

    model, target = synthesize_phantom()
    tris = model.mesh.triangles
    rng = np.random.default_rng(0)
    pts = rng.uniform(model.bounds[0] - 5, model.bounds[1] + 5,
                      size=(args.points, 3))
    print(f"phantom mesh: {len(tris)} triangles, {args.points} query points")

    rows = []
    backends = ["pure"] + (["compiled"] if compiled_available() else [])
    results = {}
    for backend in backends:
        q = make_query(tris, force=backend)
        tn, ti = time_queries(q, pts)
        results[backend] = (tn, ti)
        rows.append((backend, tn, ti))

    print(f"\n{'backend':<10} {'nearest':>12} {'inside':>12} {'us/point':>10}")
    for backend, tn, ti in rows:
        per = (tn + ti) / args.points * 1e6
        print(f"{backend:<10} {tn * 1e3:>10.1f}ms {ti * 1e3:>10.1f}ms {per:>10.2f}")
    if "compiled" in results:
        sp_n = results["pure"][0] / results["compiled"][0]
        sp_i = results["pure"][1] / results["compiled"][1]
        print(f"\nspeedup: nearest x{sp_n:.0f}, inside x{sp_i:.0f}")

    # end-to-end: full 100-point collision checks as used inside env.step
    rig = RigGeometry(insertion_port=model.insertion_port,
                      passive_length=0.0, active_length=120.0)
    shapes = [forward_kinematics(
        JointState(translation=rng.uniform(5, 35),
                   rotation=rng.uniform(-30, 30),
                   bending=rng.uniform(0, 40)), rig)
        for _ in range(args.collisions)]
    print(f"\ncollision checks ({args.collisions} x 100-point shapes):")
    for backend in backends:
        m = HeartModel(mesh=model.mesh, insertion_port=model.insertion_port,
                       _query=make_query(tris, force=backend))
        t0 = time.perf_counter()
        for shape in shapes:
            collision(m, shape, 1.0)
        dt = time.perf_counter() - t0
        print(f"  {backend:<10} {dt / args.collisions * 1e3:8.2f} ms/check")


if __name__ == "__main__":
    main()

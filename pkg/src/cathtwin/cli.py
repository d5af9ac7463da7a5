"""Command-line entry points: phantom, fit-shape, train, evaluate, probmap,
simulate, metrics, compare, serve.

Every run writes a self-contained record directory (config snapshot,
artifacts, manifest with content hashes) so results can be reproduced and
re-verified byte for byte. Errors are reported as one JSON object on stderr
with a nonzero exit status.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .catheter import JointLimits, JointState
from .config import ConfigError, RunConfig, load_config
from .copilot import ControlMode, Phase, init_session
from .geometry import (
    load_heart_model,
    synthesize_phantom,
    write_stl_binary,
)
from .planner import (
    EnvConfig,
    InitDistribution,
    Policy,
    SacConfig,
    evaluate,
    make_env,
    train_sac,
)
from .probmap import ProbabilityMap, build_probability_maps, sample_trajectories
from .runrecord import write_run_record
from .shapemodel import fit_shape_model, generate_shape_dataset
from .simulate import (
    compute_run_metrics,
    ideal_view_lines,
    jitter_target,
    metrics_csv,
    run_scripted_session,
)
from .stats import compare_groups
from .trajectory import Trajectory
from .viewmetrics import default_cameras

log = logging.getLogger("cathtwin")


class CliError(RuntimeError):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def build_scene(cfg: RunConfig):
    """Model, valve target and rig from a run config (mesh file or phantom)."""
    if cfg.mesh_path is not None:
        model = load_heart_model(Path(cfg.mesh_path).read_bytes(),
                                 unit_scale=cfg.mesh_unit_scale)
        from .geometry.heart import ValveTarget
        target = ValveTarget(p1=np.asarray(cfg.mesh_target[0]),
                             p2=np.asarray(cfg.mesh_target[1]))
        target.validate_inside(model)
    else:
        model, target = synthesize_phantom(cfg.phantom)
    return model, target, cfg.rig_for(model.insertion_port)


def _make_env(cfg: RunConfig, model, target, rig, seed=None):
    return make_env(model, target, cfg.limits, cfg.env, cfg.init, rig,
                    seed=cfg.seed if seed is None else seed)


def _load_policy(path: str | None) -> Policy:
    if path is None:
        raise CliError("--policy is required for this subcommand", 2)
    p = Path(path)
    if not p.exists():
        raise CliError(f"policy file not found: {p}", 2)
    return Policy.from_json(p.read_text())


def _load_maps(path: str | None) -> ProbabilityMap:
    if path is None:
        raise CliError("--maps is required for this subcommand", 2)
    p = Path(path)
    if not p.exists():
        raise CliError(f"probability-map file not found: {p}", 2)
    return ProbabilityMap.from_json(p.read_text())


def _scene_doc(cfg: RunConfig, model) -> str:
    return json.dumps({
        "bounds": model.bounds.tolist(),
        "port_origin": model.insertion_port.origin.tolist(),
        "port_axis": model.insertion_port.axis.tolist(),
        "passive_length": cfg.rig_passive_length,
        "active_length": cfg.rig_active_length,
    }, sort_keys=True)


# ---------------------------------------------------------------------------
# subcommands

def cmd_phantom(cfg: RunConfig, args) -> int:
    model, target, _ = build_scene(cfg)
    artifacts = {
        "phantom.stl": write_stl_binary(model.mesh),
        "target.json": json.dumps({
            "p1": target.p1.tolist(), "p2": target.p2.tolist(),
            "axis": target.axis.tolist(),
        }, sort_keys=True),
        "scene.json": _scene_doc(cfg, model),
    }
    h = write_run_record(args.out, cfg.snapshot(), artifacts)
    print(f"phantom written to {args.out} ({len(model.mesh.faces)} triangles, "
          f"record {h[:12]})")
    return 0


def cmd_fit_shape(cfg: RunConfig, args) -> int:
    sf = cfg.shape_fit
    dataset = generate_shape_dataset(
        sf.n, seed=sf.seed,
        bending_lo=cfg.limits.lo[3], bending_hi=cfg.limits.hi[3],
        active_length=cfg.rig_active_length,
    )
    model = fit_shape_model(dataset, epochs=sf.epochs, seed=sf.seed,
                            val_fraction=sf.val_fraction, lr=sf.lr)
    rep = model.fit_report
    artifacts = {
        "shapemodel.json": model.to_json(),
        "fit_report.json": json.dumps(rep.__dict__, sort_keys=True),
    }
    h = write_run_record(args.out, cfg.snapshot(), artifacts)
    print(f"shape model fit: held-out mean {rep.val_mean_mm:.4f} mm, "
          f"max {rep.val_max_mm:.4f} mm (record {h[:12]})")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    model, target, rig = build_scene(cfg)
    env = _make_env(cfg, model, target, rig)
    policy, curves = train_sac(env, cfg.sac, seed=cfg.seed)
    artifacts = {
        "policy.json": policy.to_json(),
        "curves.csv": curves.to_csv(),
    }
    h = write_run_record(args.out, cfg.snapshot(), artifacts)
    rewards = curves.rewards()
    print(f"trained {cfg.sac.episodes} episodes; final-50 mean reward "
          f"{rewards[-50:].mean():.1f} (record {h[:12]})")
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    model, target, rig = build_scene(cfg)
    policy = _load_policy(args.policy)
    env = _make_env(cfg, model, target, rig, seed=cfg.seed + 1)
    stats = evaluate(policy, env, n=args.n, seed=cfg.seed + 2)
    doc = {
        "position_error_mean_mm": stats.position_error_mean,
        "position_error_std_mm": stats.position_error_std,
        "position_error_max_mm": stats.position_error_max,
        "orientation_error_mean_deg": stats.orientation_error_mean,
        "orientation_error_std_deg": stats.orientation_error_std,
        "orientation_error_max_deg": stats.orientation_error_max,
        "success_rate": stats.success_rate,
        "n": stats.n,
    }
    rows = io.StringIO()
    w = csv.DictWriter(rows, fieldnames=list(stats.records[0].keys()))
    w.writeheader()
    w.writerows(stats.records)
    artifacts = {
        "evaluation.json": json.dumps(doc, sort_keys=True, indent=1),
        "rollouts.csv": rows.getvalue(),
    }
    h = write_run_record(args.out, cfg.snapshot(), artifacts)
    print(stats.summary() + f" (record {h[:12]})")
    return 0


def cmd_probmap(cfg: RunConfig, args) -> int:
    model, target, rig = build_scene(cfg)
    policy = _load_policy(args.policy)
    env = _make_env(cfg, model, target, rig)
    pm = cfg.probmap
    samples = sample_trajectories(policy, env, n_inits=pm.n_inits, seed=cfg.seed)
    maps = build_probability_maps(samples, cfg.limits, k_tb=pm.k_tb, k_rb=pm.k_rb,
                                  seed=cfg.seed, successful_only=pm.successful_only,
                                  tol=pm.tol, max_iter=pm.max_iter)
    artifacts = {"maps/probmap.json": maps.to_json()}
    for pair in ("tb", "rb"):
        xs, ys, dens = maps.grid(pair)
        buf = io.StringIO()
        buf.write("x,y,density\n")
        for i, x in enumerate(xs):
            for jj, y in enumerate(ys):
                buf.write(f"{x!r},{y!r},{dens[i, jj]!r}\n")
        artifacts[f"maps/grid_{pair}.csv"] = buf.getvalue()
    h = write_run_record(args.out, cfg.snapshot(), artifacts)
    print(f"probability maps built from {samples.n_inits} rollouts, "
          f"{len(samples.rows)} visited states "
          f"({samples.n_success} successful rollouts, record {h[:12]})")
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    model, target, rig = build_scene(cfg)
    mode = ControlMode(args.mode)
    policy = _load_policy(args.policy) if (args.policy or mode == ControlMode.copilot) else None
    maps = _load_maps(args.maps) if (args.maps or mode == ControlMode.copilot) else None
    cameras = default_cameras(model.bounds)
    sim = cfg.simulate
    artifacts: dict[str, str | bytes] = {"scene.json": _scene_doc(cfg, model)}
    rows = []
    for k in range(sim.profiles):
        rng = np.random.default_rng(cfg.seed * 7919 + k)
        env = _make_env(cfg, model, target, rig, seed=cfg.seed * 7919 + k)
        env.reset()
        true_target = jitter_target(target, sim.target_jitter_mm, rng)
        run = run_scripted_session(
            env, policy, maps, mode, cfg.operator_profile(k), true_target,
            cfg.session_config(), dt=sim.dt, max_time_s=sim.max_time_s,
            profile_index=k,
        )
        ideal = ideal_view_lines(run.goal_joints, rig, cameras)
        m = compute_run_metrics(run.trajectory, rig, cameras, ideal)
        rows.append({
            "run": k, "mode": run.mode, "profile": k,
            "accumulated_error_px": m["accumulated_error_px"],
            "projected_trajectory_length_px": m["projected_trajectory_length_px"],
            "tip_trajectory_length_mm": m["tip_trajectory_length_mm"],
            "motion_efficiency": m["motion_efficiency"],
            "total_time_s": run.total_time,
            "intervention_time_s": run.intervention_time,
            "success": run.success,
        })
        artifacts[f"trajectories/run_{k:03d}.jsonl"] = run.trajectory.to_jsonl()
        artifacts[f"events/run_{k:03d}.jsonl"] = run.events_jsonl
        artifacts[f"ideal/run_{k:03d}.json"] = json.dumps({
            "goal_joints": run.goal_joints.tolist(),
            "true_target": {"p1": run.true_target.p1.tolist(),
                            "p2": run.true_target.p2.tolist()},
        }, sort_keys=True)
        log.info("run %d/%d %s: total %.1fs intervention %.1fs success=%s",
                 k + 1, sim.profiles, mode.value, run.total_time,
                 run.intervention_time, run.success)
    artifacts["metrics.csv"] = metrics_csv(rows)
    h = write_run_record(args.out, cfg.snapshot(), artifacts)
    n_ok = sum(r["success"] for r in rows)
    print(f"{mode.value}: {n_ok}/{len(rows)} runs aligned; mean intervention "
          f"{np.mean([r['intervention_time_s'] for r in rows]):.1f}s of "
          f"{np.mean([r['total_time_s'] for r in rows]):.1f}s (record {h[:12]})")
    return 0


def cmd_metrics(cfg: RunConfig, args) -> int:
    run_dir = Path(args.run)
    if not (run_dir / "manifest.json").exists():
        raise CliError(f"not a run record: {run_dir}", 2)
    scene = json.loads((run_dir / "scene.json").read_text())
    from .catheter import RigGeometry
    from .geometry.heart import Pose
    rig = RigGeometry(
        insertion_port=Pose(scene["port_origin"], scene["port_axis"]),
        passive_length=scene["passive_length"],
        active_length=scene["active_length"],
    )
    cameras = default_cameras(np.asarray(scene["bounds"]))
    snapshot = (run_dir / "config.snapshot").read_text()
    meta = json.loads(snapshot)
    rows = []
    traj_files = sorted((run_dir / "trajectories").glob("run_*.jsonl"))
    if not traj_files:
        raise CliError("run record has no trajectories", 2)
    old = {}
    if (run_dir / "metrics.csv").exists():
        with open(run_dir / "metrics.csv") as f:
            for row in csv.DictReader(f):
                old[int(row["run"])] = row
    for tf in traj_files:
        k = int(tf.stem.split("_")[1])
        traj = Trajectory.from_jsonl(tf.read_text())
        ideal_doc = json.loads((run_dir / "ideal" / f"run_{k:03d}.json").read_text())
        ideal = ideal_view_lines(np.asarray(ideal_doc["goal_joints"]), rig, cameras)
        m = compute_run_metrics(traj, rig, cameras, ideal)
        base = old.get(k, {})
        rows.append({
            "run": k,
            "mode": base.get("mode", "unknown"),
            "profile": int(base.get("profile", k)),
            **m,
            "total_time_s": float(base.get("total_time_s", traj.steps[-1].t)),
            "intervention_time_s": float(base.get("intervention_time_s", 0.0)),
            "success": base.get("success", "True") in ("True", "true", True),
        })
    out_text = metrics_csv(rows)
    out_path = Path(args.out) if args.out else run_dir / "metrics_recomputed.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(out_text)
    print(f"metrics for {len(rows)} runs written to {out_path}")
    return 0


def _read_metric_column(path: str, column: str) -> np.ndarray:
    p = Path(path)
    src = p / "metrics.csv" if p.is_dir() else p
    if not src.exists():
        raise CliError(f"metrics file not found: {src}", 2)
    with open(src) as f:
        rows = list(csv.DictReader(f))
    if not rows or column not in rows[0]:
        raise CliError(f"column {column!r} not in {src}", 2)
    return np.array([float(r[column]) for r in rows])


def cmd_compare(cfg: RunConfig, args) -> int:
    a = _read_metric_column(args.a, args.column)
    b = _read_metric_column(args.b, args.column)
    res = compare_groups(a, b, alpha=args.alpha)
    doc = {
        "column": args.column,
        "a": {"path": args.a, "n": len(a), "mean": float(a.mean()), "std": float(a.std())},
        "b": {"path": args.b, "n": len(b), "mean": float(b.mean()), "std": float(b.std())},
        **res.as_dict(),
    }
    text = json.dumps(doc, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_serve(cfg: RunConfig, args) -> int:
    from .bridge import serve
    model, target, rig = build_scene(cfg)
    mode = ControlMode(args.mode)
    policy = _load_policy(args.policy) if (args.policy or mode == ControlMode.copilot) else None
    maps = _load_maps(args.maps) if (args.maps or mode == ControlMode.copilot) else None
    env = _make_env(cfg, model, target, rig)
    env.reset()
    session = init_session(policy, maps, env, mode, phase=Phase.initialization,
                           config=cfg.session_config())
    print(f"serving on ws://{args.host}:{args.port} (mode {mode.value}); Ctrl-C to stop")
    serve(session, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cathtwin",
        description="Digital-twin simulator and co-piloted control stack for "
                    "robotic transcatheter tricuspid valve replacement.",
    )
    parser.add_argument("--version", action="version", version=f"cathtwin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, needs_out=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="TOML run config (defaults apply if omitted)")
        if needs_out:
            p.add_argument("--out", required=True, help="output run directory")
        p.set_defaults(fn=fn)
        return p

    add("phantom", cmd_phantom, "synthesize the phantom lumen mesh and valve target")
    add("fit-shape", cmd_fit_shape, "fit the neural bending->shape model")
    add("train", cmd_train, "train the SAC localization policy")

    p = add("evaluate", cmd_evaluate, "evaluate a policy over random initializations")
    p.add_argument("--policy", required=True)
    p.add_argument("--n", type=int, default=100)

    p = add("probmap", cmd_probmap, "build joint-space probability maps from rollouts")
    p.add_argument("--policy", required=True)

    p = add("simulate", cmd_simulate, "closed-loop scripted-operator experiment")
    p.add_argument("--mode", choices=[m.value for m in ControlMode], required=True)
    p.add_argument("--policy", default=None)
    p.add_argument("--maps", default=None)

    p = sub.add_parser("metrics", help="recompute evaluation metrics from a recorded run")
    p.add_argument("--config", default=None)
    p.add_argument("--run", required=True, help="run record directory")
    p.add_argument("--out", default=None, help="output CSV (default: <run>/metrics_recomputed.csv)")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("compare", help="two-group statistical comparison of run metrics")
    p.add_argument("--config", default=None)
    p.add_argument("--a", required=True, help="metrics.csv or run dir (group A)")
    p.add_argument("--b", required=True, help="metrics.csv or run dir (group B)")
    p.add_argument("--column", default="intervention_time_s")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("serve", help="start the live operator bridge")
    p.add_argument("--config", default=None)
    p.add_argument("--mode", choices=[m.value for m in ControlMode], default="copilot")
    p.add_argument("--policy", default=None)
    p.add_argument("--maps", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CATHTWIN_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.fn(cfg, args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    except CliError as exc:
        print(json.dumps({"error": "cli", "message": str(exc)}), file=sys.stderr)
        return exc.code
    except Exception as exc:  # runtime failures still produce machine-readable errors
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

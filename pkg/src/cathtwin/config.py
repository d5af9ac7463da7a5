"""Run configuration: one TOML document, fully defaulted and schema-checked.

Every constant of the control stack lives here (reward constants, the 0.20
governor floor, the 100-point shape discretization, joint limits) so a run
is reproducible from its config snapshot alone. Unknown keys are rejected.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .catheter import JointLimits, JointState, RigGeometry
from .copilot import OperatorProfile, SessionConfig
from .geometry.heart import Pose
from .geometry.phantom import PhantomSpec
from .planner.env import EnvConfig, InitDistribution
from .planner.sac import SacConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeFitConfig:
    n: int = 1000
    epochs: int = 2500
    seed: int = 0
    val_fraction: float = 0.2
    lr: float = 2e-3


@dataclass(frozen=True)
class ProbmapConfig:
    n_inits: int = 500
    k_tb: int = 5
    k_rb: int = 5
    successful_only: bool = False
    tol: float = 1e-6
    max_iter: int = 300


@dataclass(frozen=True)
class GovernorConfig:
    floor: float = 0.20
    lookahead_translation: float = 5.0
    lookahead_rotation: float = 15.0
    lookahead_bending: float = 15.0

    def lookahead(self) -> dict[str, float]:
        return {
            "translation": self.lookahead_translation,
            "rotation": self.lookahead_rotation,
            "bending": self.lookahead_bending,
        }


@dataclass(frozen=True)
class SimulateConfig:
    profiles: int = 10
    max_time_s: float = 600.0
    dt: float = 0.02
    target_jitter_mm: float = 3.0
    reaction_delay: float = 0.3
    error_bias: float = 0.1
    noise: float = 0.05
    intervention_threshold: float = 6.0


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    mesh_path: str | None = None      # load this lumen instead of the phantom
    mesh_unit_scale: float = 1.0
    mesh_target: tuple | None = None  # calibrated (p1, p2) for external meshes
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    limits: JointLimits = field(default_factory=JointLimits.default)
    rig_passive_length: float = 0.0
    rig_active_length: float = 120.0
    env: EnvConfig = field(default_factory=EnvConfig)
    init: InitDistribution = field(default_factory=InitDistribution)
    sac: SacConfig = field(default_factory=SacConfig)
    shape_fit: ShapeFitConfig = field(default_factory=ShapeFitConfig)
    probmap: ProbmapConfig = field(default_factory=ProbmapConfig)
    governor: GovernorConfig = field(default_factory=GovernorConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)

    def rig_for(self, port: Pose) -> RigGeometry:
        return RigGeometry(insertion_port=port,
                           passive_length=self.rig_passive_length,
                           active_length=self.rig_active_length)

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            tick_rate=self.session.tick_rate,
            replan_idle_s=self.session.replan_idle_s,
            scale_floor=self.governor.floor,
            lookahead=self.governor.lookahead(),
        )

    def operator_profile(self, k: int) -> OperatorProfile:
        s = self.simulate
        return OperatorProfile(
            reaction_delay=s.reaction_delay,
            error_bias=s.error_bias * (1.0 if k % 2 == 0 else -1.0),
            intervention_threshold=s.intervention_threshold,
            noise=s.noise,
            seed=self.seed * 1000 + k,
        )

    # -- canonical snapshot ---------------------------------------------------

    def snapshot(self) -> str:
        doc = {
            "seed": self.seed,
            "mesh_path": self.mesh_path,
            "mesh_unit_scale": self.mesh_unit_scale,
            "mesh_target": [list(p) for p in self.mesh_target]
            if self.mesh_target else None,
            "phantom": asdict(self.phantom),
            "limits": {
                "lo": self.limits.lo.tolist(),
                "hi": self.limits.hi.tolist(),
                "max_velocity": self.limits.max_velocity.tolist(),
            },
            "rig": {
                "passive_length": self.rig_passive_length,
                "active_length": self.rig_active_length,
            },
            "env": asdict(self.env),
            "init": {
                "nominal": self.init.nominal.as_array().tolist(),
                "translation_half_range": self.init.translation_half_range,
                "rotation_half_range": self.init.rotation_half_range,
                "bending_lo": self.init.bending_lo,
                "bending_hi": self.init.bending_hi,
            },
            "sac": asdict(self.sac),
            "shape_fit": asdict(self.shape_fit),
            "probmap": asdict(self.probmap),
            "governor": asdict(self.governor),
            "session": {
                "tick_rate": self.session.tick_rate,
                "replan_idle_s": self.session.replan_idle_s,
            },
            "simulate": asdict(self.simulate),
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    def snapshot_hash(self) -> str:
        return hashlib.sha256(self.snapshot().encode()).hexdigest()


def _take(section: dict, name: str, keys: dict[str, type]):
    """Pop known keys with type checks; reject unknown keys."""
    out = {}
    for key, val in section.items():
        if key not in keys:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        want = keys[key]
        if want is float and isinstance(val, int):
            val = float(val)
        if want is not None and not isinstance(val, want):
            raise ConfigError(f"[{name}].{key}: expected {want.__name__}, got {type(val).__name__}")
        out[key] = val
    return out


def load_config(path: str | Path | None = None, text: str | None = None) -> RunConfig:
    """Parse and validate a TOML run config; None loads pure defaults."""
    if text is None:
        if path is None:
            doc = {}
        else:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file not found: {p}")
            doc = tomllib.loads(p.read_text())
    else:
        doc = tomllib.loads(text)

    known_sections = {"phantom", "limits", "rig", "env", "init", "sac",
                      "shape_fit", "probmap", "governor", "session",
                      "simulate", "anatomy"}
    top = _take({k: v for k, v in doc.items() if not isinstance(v, dict)},
                "top-level", {"seed": int})
    for k in doc:
        if isinstance(doc[k], dict) and k not in known_sections:
            raise ConfigError(f"unknown section [{k}]")

    anatomy = _take(doc.get("anatomy", {}), "anatomy",
                    {"mesh_path": str, "unit_scale": float,
                     "target_p1": list, "target_p2": list})
    mesh_path = anatomy.get("mesh_path")
    if mesh_path is not None:
        if not Path(mesh_path).exists():
            raise ConfigError(f"[anatomy].mesh_path does not exist: {mesh_path}")
        if "target_p1" not in anatomy or "target_p2" not in anatomy:
            raise ConfigError("[anatomy] external meshes need calibrated "
                              "target_p1/target_p2 centerline points")

    ph = _take(doc.get("phantom", {}), "phantom", {
        "svc_radius": float, "svc_length": float, "atrium_radius": float,
        "ventricle_radius": float, "annulus_radius": float,
        "annulus_offset_angle": float, "annulus_thickness": float,
        "voxel_mm": float})
    lim = _take(doc.get("limits", {}), "limits",
                {"lo": list, "hi": list, "max_velocity": list})
    rig = _take(doc.get("rig", {}), "rig",
                {"passive_length": float, "active_length": float})
    envd = _take(doc.get("env", {}), "env", {
        "max_steps": int, "action_scale": list, "success_pos_tol": float,
        "success_ang_tol": float, "wall_margin": float, "r_step": float,
        "r_obstacle": float, "r_target": float, "w_err": float,
        "terminate_on_collision": bool})
    if "action_scale" in envd:
        envd["action_scale"] = tuple(float(x) for x in envd["action_scale"])
    initd = _take(doc.get("init", {}), "init", {
        "translation": float, "rotation": float, "bending": float,
        "translation_half_range": float, "rotation_half_range": float,
        "bending_lo": float, "bending_hi": float})
    sacd = _take(doc.get("sac", {}), "sac", {
        "episodes": int, "gamma": float, "tau": float, "replay_capacity": int,
        "batch_size": int, "hidden": int, "lr": float, "target_entropy": float,
        "warmup_steps": int, "updates_per_step": int, "reward_scale": float})
    sfd = _take(doc.get("shape_fit", {}), "shape_fit", {
        "n": int, "epochs": int, "seed": int, "val_fraction": float, "lr": float})
    pmd = _take(doc.get("probmap", {}), "probmap", {
        "n_inits": int, "k_tb": int, "k_rb": int, "successful_only": bool,
        "tol": float, "max_iter": int})
    gov = _take(doc.get("governor", {}), "governor", {
        "floor": float, "lookahead_translation": float,
        "lookahead_rotation": float, "lookahead_bending": float})
    sess = _take(doc.get("session", {}), "session",
                 {"tick_rate": float, "replan_idle_s": float})
    sim = _take(doc.get("simulate", {}), "simulate", {
        "profiles": int, "max_time_s": float, "dt": float,
        "target_jitter_mm": float, "reaction_delay": float,
        "error_bias": float, "noise": float, "intervention_threshold": float})

    nominal_kwargs = {}
    for k in ("translation", "rotation", "bending"):
        if k in initd:
            nominal_kwargs[k] = initd.pop(k)
    init_default = InitDistribution()
    nominal = JointState(**{**{"translation": init_default.nominal.translation},
                            **nominal_kwargs})

    try:
        cfg = RunConfig(
            seed=top.get("seed", 0),
            mesh_path=mesh_path,
            mesh_unit_scale=anatomy.get("unit_scale", 1.0),
            mesh_target=(tuple(anatomy["target_p1"]), tuple(anatomy["target_p2"]))
            if "target_p1" in anatomy else None,
            phantom=PhantomSpec(**ph),
            limits=JointLimits(**lim) if lim else JointLimits.default(),
            rig_passive_length=rig.get("passive_length", 0.0),
            rig_active_length=rig.get("active_length", 120.0),
            env=EnvConfig(**envd),
            init=InitDistribution(nominal=nominal, **initd),
            sac=SacConfig(**sacd),
            shape_fit=ShapeFitConfig(**sfd),
            probmap=ProbmapConfig(**pmd),
            governor=GovernorConfig(**gov),
            session=SessionConfig(**sess),
            simulate=SimulateConfig(**sim),
        )
        cfg.phantom.validate()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg

"""Joint-space probabilistic maps distilled from Monte-Carlo policy rollouts.

Visited (translation, rotation, bending) states are pooled over many
randomized initializations; translation-bending and rotation-bending
marginals are each fitted with a Gaussian mixture by EM, max-normalized on a
grid over the joint limits, and drive the speed governor: moving toward
lower map density slows the commanded DOF down to a configurable floor,
moving toward equal or higher density keeps full speed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .catheter import JointLimits, JointState
from .planner.env import LocalizationEnv, TerminalKind
from .planner.sac import Policy

GRID_N = 200
DENSITY_EPS = 1e-6


# ---------------------------------------------------------------------------
# Gaussian mixture by EM

@dataclass
class Gmm2D:
    weights: np.ndarray      # (k,)
    means: np.ndarray        # (k, 2)
    covariances: np.ndarray  # (k, 2, 2)
    log_likelihood_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be a simplex")
        self.weights = w
        self.means = np.asarray(self.means, dtype=np.float64).reshape(-1, 2)
        self.covariances = np.asarray(self.covariances, dtype=np.float64).reshape(-1, 2, 2)

    @property
    def k(self) -> int:
        return len(self.weights)

    def pdf(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.zeros(len(p))
        for w, mu, cov in zip(self.weights, self.means, self.covariances):
            out += w * _gauss2(p, mu, cov)
        return out


def _gauss2(p: np.ndarray, mu: np.ndarray, cov: np.ndarray) -> np.ndarray:
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    d = p - mu
    q = d[:, 0] ** 2 * inv[0, 0] + 2 * d[:, 0] * d[:, 1] * inv[0, 1] + d[:, 1] ** 2 * inv[1, 1]
    return np.exp(-0.5 * q) / (2.0 * np.pi * np.sqrt(det))


def _floor_covariance(cov: np.ndarray, floor: float) -> np.ndarray:
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def _kmeanspp_init(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [rows[rng.integers(len(rows))]]
    for _ in range(k - 1):
        d2 = np.min(
            [np.sum((rows - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(rows[rng.integers(len(rows))])
            continue
        centers.append(rows[rng.choice(len(rows), p=d2 / total)])
    return np.asarray(centers)


def fit_gmm(rows: np.ndarray, k: int, tol: float = 1e-6, max_iter: int = 300,
            seed: int = 0, cov_floor: float = 1e-3) -> Gmm2D:
    """EM fit with k-means++ seeding and an eigenvalue floor every M-step.

    The log-likelihood trace is recorded per iteration and is non-decreasing
    (up to the floor projection). An emptied component is re-seeded once.
    """
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, 2)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(rows) < k:
        raise ValueError(f"need at least k={k} rows, got {len(rows)}")
    if len(np.unique(rows, axis=0)) < k:
        raise ValueError("k exceeds the number of distinct sample points")
    rng = np.random.default_rng(seed)

    means = _kmeanspp_init(rows, k, rng)
    base_cov = np.cov(rows.T) if len(rows) > 1 else np.eye(2)
    base_cov = _floor_covariance(np.atleast_2d(base_cov).reshape(2, 2), cov_floor)
    covs = np.stack([base_cov.copy() for _ in range(k)])
    weights = np.full(k, 1.0 / k)

    trace: list[float] = []
    reseeded = False
    for _ in range(max_iter):
        # E-step
        resp = np.stack(
            [w * _gauss2(rows, mu, cov) for w, mu, cov in zip(weights, means, covs)],
            axis=1,
        )
        total = resp.sum(axis=1)
        total = np.maximum(total, 1e-300)
        ll = float(np.log(total).sum())
        resp = resp / total[:, None]
        nk = resp.sum(axis=0)

        if np.any(nk < 1e-12):
            if reseeded:
                raise RuntimeError("GMM component emptied twice during EM")
            reseeded = True
            means = _kmeanspp_init(rows, k, rng)
            covs = np.stack([base_cov.copy() for _ in range(k)])
            weights = np.full(k, 1.0 / k)
            trace.clear()
            continue

        if trace and ll - trace[-1] < tol:
            trace.append(ll)
            break
        trace.append(ll)

        # M-step with covariance eigenvalue floor
        weights = nk / len(rows)
        means = (resp.T @ rows) / nk[:, None]
        for j in range(k):
            d = rows - means[j]
            cov = (resp[:, j, None] * d).T @ d / nk[j]
            covs[j] = _floor_covariance(cov, cov_floor)

    weights = weights / weights.sum()
    return Gmm2D(weights=weights, means=means, covariances=covs,
                 log_likelihood_trace=trace)


# ---------------------------------------------------------------------------
# sampling and maps

@dataclass
class JointSampleSet:
    """Visited planning-DOF rows pooled across rollouts."""

    rows: np.ndarray  # (n, 3): translation, rotation, bending
    n_inits: int
    seed: int
    n_success: int
    success_mask: np.ndarray  # (n,) True where the source rollout succeeded

    @property
    def translation_bending(self) -> np.ndarray:
        return self.rows[:, [0, 2]]

    @property
    def rotation_bending(self) -> np.ndarray:
        return self.rows[:, [1, 2]]

    def filtered(self, successful_only: bool) -> "JointSampleSet":
        if not successful_only:
            return self
        rows = self.rows[self.success_mask]
        return JointSampleSet(rows=rows, n_inits=self.n_inits, seed=self.seed,
                              n_success=self.n_success,
                              success_mask=np.ones(len(rows), dtype=bool))


def sample_trajectories(policy: Policy, env: LocalizationEnv, n_inits: int,
                        seed: int = 0, deterministic: bool = True) -> JointSampleSet:
    """Pool visited (translation, rotation, bending) states over n_inits rollouts.

    Rollout r uses the derived seed (seed * 100003 + r); pooling follows
    rollout index order, so the set is reproducible under any scheduling.
    """
    if n_inits < 1:
        raise ValueError("n_inits must be >= 1")
    from .planner.evaluate import rollout  # local import to avoid a cycle

    pooled = []
    masks = []
    n_success = 0
    for r in range(n_inits):
        env.seed(seed * 100003 + r)
        traj = rollout(policy, env, deterministic=deterministic)
        rows = traj.joints[:, [0, 1, 3]]
        ok = traj.terminal == TerminalKind.success.value
        n_success += int(ok)
        pooled.append(rows)
        masks.append(np.full(len(rows), ok))
    rows = np.concatenate(pooled, axis=0)
    return JointSampleSet(rows=rows, n_inits=n_inits, seed=seed,
                          n_success=n_success,
                          success_mask=np.concatenate(masks))


@dataclass
class ProbabilityMap:
    """Max-normalized GMM densities over (translation, bending) and
    (rotation, bending)."""

    tb: Gmm2D
    rb: Gmm2D
    tb_density_max: float
    rb_density_max: float
    limits: JointLimits
    provenance: dict = field(default_factory=dict)

    def density(self, dof_pair: str, point) -> float:
        """Normalized density in [0, 1] at a 2D point of the given pair."""
        if dof_pair == "tb":
            gmm, dmax = self.tb, self.tb_density_max
        elif dof_pair == "rb":
            gmm, dmax = self.rb, self.rb_density_max
        else:
            raise ValueError("dof_pair must be 'tb' or 'rb'")
        val = float(gmm.pdf(np.asarray(point, dtype=np.float64).reshape(1, 2))[0])
        return float(np.clip(val / dmax, 0.0, 1.0))

    def grid(self, dof_pair: str, n: int = GRID_N):
        """(x, y, normalized density) arrays over the joint limits."""
        if dof_pair == "tb":
            ix, iy, gmm, dmax = 0, 3, self.tb, self.tb_density_max
        elif dof_pair == "rb":
            ix, iy, gmm, dmax = 1, 3, self.rb, self.rb_density_max
        else:
            raise ValueError("dof_pair must be 'tb' or 'rb'")
        xs = np.linspace(self.limits.lo[ix], self.limits.hi[ix], n)
        ys = np.linspace(self.limits.lo[iy], self.limits.hi[iy], n)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        dens = gmm.pdf(np.column_stack([gx.ravel(), gy.ravel()])).reshape(n, n)
        return xs, ys, np.clip(dens / dmax, 0.0, 1.0)

    def to_json(self) -> str:
        def dump(g: Gmm2D):
            return {
                "weights": g.weights.tolist(),
                "means": g.means.tolist(),
                "covariances": g.covariances.tolist(),
                "log_likelihood_trace": g.log_likelihood_trace,
            }

        return json.dumps({
            "schema": "cathtwin-probmap",
            "version": 1,
            "tb": dump(self.tb),
            "rb": dump(self.rb),
            "tb_density_max": self.tb_density_max,
            "rb_density_max": self.rb_density_max,
            "limits": {
                "lo": self.limits.lo.tolist(),
                "hi": self.limits.hi.tolist(),
                "max_velocity": self.limits.max_velocity.tolist(),
            },
            "provenance": self.provenance,
        })

    @classmethod
    def from_json(cls, text: str) -> "ProbabilityMap":
        doc = json.loads(text)
        if doc.get("schema") != "cathtwin-probmap" or doc.get("version") != 1:
            raise ValueError("not a version-1 probability-map document")

        def load(d):
            return Gmm2D(
                weights=np.asarray(d["weights"]),
                means=np.asarray(d["means"]),
                covariances=np.asarray(d["covariances"]),
                log_likelihood_trace=list(d.get("log_likelihood_trace", [])),
            )

        lim = doc["limits"]
        return cls(
            tb=load(doc["tb"]),
            rb=load(doc["rb"]),
            tb_density_max=doc["tb_density_max"],
            rb_density_max=doc["rb_density_max"],
            limits=JointLimits(lo=lim["lo"], hi=lim["hi"],
                               max_velocity=lim["max_velocity"]),
            provenance=doc.get("provenance", {}),
        )


def _grid_max(gmm: Gmm2D, lo, hi, n: int = GRID_N) -> float:
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return float(gmm.pdf(np.column_stack([gx.ravel(), gy.ravel()])).max())


def build_probability_maps(samples: JointSampleSet, limits: JointLimits,
                           k_tb: int = 5, k_rb: int = 5, seed: int = 0,
                           successful_only: bool = False,
                           tol: float = 1e-6, max_iter: int = 300) -> ProbabilityMap:
    data = samples.filtered(successful_only)
    tb = fit_gmm(data.translation_bending, k_tb, tol=tol, max_iter=max_iter, seed=seed)
    rb = fit_gmm(data.rotation_bending, k_rb, tol=tol, max_iter=max_iter, seed=seed + 1)
    tb_max = _grid_max(tb, (limits.lo[0], limits.lo[3]), (limits.hi[0], limits.hi[3]))
    rb_max = _grid_max(rb, (limits.lo[1], limits.lo[3]), (limits.hi[1], limits.hi[3]))
    return ProbabilityMap(
        tb=tb, rb=rb, tb_density_max=tb_max, rb_density_max=rb_max,
        limits=limits,
        provenance={
            "n_inits": data.n_inits,
            "seed": data.seed,
            "rows": int(len(data.rows)),
            "n_success": data.n_success,
            "successful_only": successful_only,
            "k_tb": k_tb,
            "k_rb": k_rb,
        },
    )


def density(pmap: ProbabilityMap, dof_pair: str, point) -> float:
    return pmap.density(dof_pair, point)


# ---------------------------------------------------------------------------
# speed governor

DEFAULT_SCALE_FLOOR = 0.20
DEFAULT_LOOKAHEAD = {"translation": 5.0, "rotation": 15.0, "bending": 15.0}


def speed_scale(pmap: ProbabilityMap, current: JointState, dof: str,
                direction: float, lookahead: dict[str, float] | None = None,
                floor: float = DEFAULT_SCALE_FLOOR) -> float:
    """Velocity multiplier for a commanded DOF move.

    Evaluates the normalized density at the projected point one lookahead
    step along `direction`; the scale is the clamped density ratio
    d1 / max(d0, eps), so moving toward equal-or-higher density gives 1.0
    and deep low-density excursions bottom out at the floor. Bending takes
    the more conservative of its two maps.
    """
    if dof not in ("translation", "rotation", "bending"):
        raise ValueError(f"speed governor only covers planning DOFs, got {dof!r}")
    look = dict(DEFAULT_LOOKAHEAD)
    if lookahead:
        look.update(lookahead)
    step = float(np.sign(direction)) * look[dof]
    t, r, b = current.translation, current.rotation, current.bending

    def ratio(pair, p0, p1):
        d0 = pmap.density(pair, p0)
        d1 = pmap.density(pair, p1)
        return float(np.clip(d1 / max(d0, DENSITY_EPS), floor, 1.0))

    if dof == "translation":
        return ratio("tb", (t, b), (t + step, b))
    if dof == "rotation":
        return ratio("rb", (r, b), (r + step, b))
    return min(ratio("tb", (t, b), (t, b + step)),
               ratio("rb", (r, b), (r, b + step)))

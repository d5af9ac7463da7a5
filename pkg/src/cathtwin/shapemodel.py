"""Neural fit of the bending-angle -> catheter-shape map.

A small tanh MLP (1 -> 64 -> 64 -> 300) regresses the 100 local-frame shape
points against the bending angle, trained full-batch with Adam on the mean
per-point Euclidean error. Gradients are written out by hand so they can be
checked against central finite differences and serialized exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .catheter import SHAPE_POINTS, CatheterShape, bend_shape

_EPS = 1e-12  # smooths the Euclidean norm at zero


@dataclass(frozen=True)
class FitReport:
    train_mean_mm: float
    val_mean_mm: float
    val_max_mm: float
    epochs_run: int
    n_train: int
    n_val: int


@dataclass
class ShapeModel:
    """Weights plus the input/output normalization constants."""

    weights: list[np.ndarray]  # [W1, b1, W2, b2, W3, b3]
    bending_lo: float
    bending_hi: float
    active_length: float
    fit_report: FitReport | None = field(default=None)

    def _normalize(self, bending) -> np.ndarray:
        b = np.atleast_1d(np.asarray(bending, dtype=np.float64))
        x = 2.0 * (b - self.bending_lo) / (self.bending_hi - self.bending_lo) - 1.0
        return x[:, None]

    def forward(self, bending) -> np.ndarray:
        """Predicted shapes, (batch, SHAPE_POINTS, 3) in mm."""
        x = self._normalize(bending)
        w1, b1, w2, b2, w3, b3 = self.weights
        h1 = np.tanh(x @ w1 + b1)
        h2 = np.tanh(h1 @ w2 + b2)
        y = h2 @ w3 + b3
        return y.reshape(-1, SHAPE_POINTS, 3) * self.active_length

    def predict(self, bending: float) -> np.ndarray:
        """Raw 100-point prediction for one bending angle (not equal-spaced)."""
        return self.forward(float(bending))[0]

    def predict_equal_arc(self, bending: float) -> np.ndarray:
        """Prediction resampled to equal arc-length spacing along the polyline."""
        return project_equal_arc(self.predict(bending))

    def to_json(self) -> str:
        doc = {
            "schema": "cathtwin-weights",
            "version": 1,
            "kind": "shape-model",
            "bending_lo": self.bending_lo,
            "bending_hi": self.bending_hi,
            "active_length": self.active_length,
            "layers": [w.tolist() for w in self.weights],
            "fit_report": None
            if self.fit_report is None
            else self.fit_report.__dict__,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ShapeModel":
        doc = json.loads(text)
        if doc.get("schema") != "cathtwin-weights" or doc.get("kind") != "shape-model":
            raise ValueError("not a shape-model weight document")
        if doc.get("version") != 1:
            raise ValueError(f"unsupported weight-document version {doc.get('version')}")
        report = doc.get("fit_report")
        return cls(
            weights=[np.asarray(w, dtype=np.float64) for w in doc["layers"]],
            bending_lo=doc["bending_lo"],
            bending_hi=doc["bending_hi"],
            active_length=doc["active_length"],
            fit_report=None if report is None else FitReport(**report),
        )


def init_weights(seed: int, hidden: int = 64, out_dim: int = 3 * SHAPE_POINTS):
    rng = np.random.default_rng(seed)
    dims = [1, hidden, hidden, out_dim]
    weights = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        weights.append(np.zeros(fan_out))
    return weights


def shape_loss_and_grads(weights, x, targets):
    """Mean per-point Euclidean error (normalized units) and its gradients.

    x: (B, 1) normalized bendings; targets: (B, SHAPE_POINTS, 3) normalized.
    """
    w1, b1, w2, b2, w3, b3 = weights
    h1 = np.tanh(x @ w1 + b1)
    h2 = np.tanh(h1 @ w2 + b2)
    y = h2 @ w3 + b3
    diff = y.reshape(targets.shape) - targets
    d = np.sqrt(np.sum(diff * diff, axis=2) + _EPS)
    loss = float(d.mean())

    dy = (diff / d[:, :, None]).reshape(y.shape) / d.size
    gw3 = h2.T @ dy
    gb3 = dy.sum(axis=0)
    dh2 = (dy @ w3.T) * (1.0 - h2 * h2)
    gw2 = h1.T @ dh2
    gb2 = dh2.sum(axis=0)
    dh1 = (dh2 @ w2.T) * (1.0 - h1 * h1)
    gw1 = x.T @ dh1
    gb1 = dh1.sum(axis=0)
    return loss, [gw1, gb1, gw2, gb2, gw3, gb3]


def generate_shape_dataset(n: int, seed: int, bending_lo: float = 0.0,
                           bending_hi: float = 160.0,
                           active_length: float = 120.0,
                           ) -> list[tuple[float, CatheterShape]]:
    """n bending angles drawn uniformly over the range, with ground-truth arcs."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    bendings = rng.uniform(bending_lo, bending_hi, size=n)
    return [(float(b), bend_shape(float(b), active_length)) for b in bendings]


def _per_point_errors(model: ShapeModel, bendings, shapes_mm):
    pred = model.forward(bendings)
    return np.linalg.norm(pred - shapes_mm, axis=2)


def fit_shape_model(dataset, epochs: int = 4000, seed: int = 0,
                    val_fraction: float = 0.2, lr: float = 2e-3,
                    hidden: int = 64) -> ShapeModel:
    """Train on a (bending, shape) dataset; deterministic for a given seed.

    The last `val_fraction` of a seeded shuffle is held out; the fit report
    carries held-out mean/max per-point error in mm.
    """
    if not dataset:
        raise ValueError("empty dataset")
    bendings = np.array([b for b, _ in dataset], dtype=np.float64)
    shapes = np.stack([s.points for _, s in dataset])
    lo = float(bendings.min())
    hi = float(bendings.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0  # constant dataset still normalizes
    active_length = float(dataset[0][1].arc_length)

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_val = max(1, int(round(val_fraction * len(dataset)))) if len(dataset) > 1 else 0
    val_idx = order[len(order) - n_val:]
    train_idx = order[:len(order) - n_val]
    if len(train_idx) == 0:
        train_idx = val_idx

    model = ShapeModel(
        weights=init_weights(seed, hidden=hidden),
        bending_lo=lo,
        bending_hi=hi,
        active_length=active_length,
    )
    x = model._normalize(bendings[train_idx])
    t = shapes[train_idx] / active_length

    # Adam, full batch, cosine-decayed step size
    m = [np.zeros_like(w) for w in model.weights]
    v = [np.zeros_like(w) for w in model.weights]
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    for epoch in range(epochs):
        loss, grads = shape_loss_and_grads(model.weights, x, t)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite training loss at epoch {epoch}")
        step = lr * (0.001 + 0.999 * 0.5 * (1 + np.cos(np.pi * epoch / epochs)))
        for i, g in enumerate(grads):
            m[i] = beta1 * m[i] + (1 - beta1) * g
            v[i] = beta2 * v[i] + (1 - beta2) * g * g
            mhat = m[i] / (1 - beta1 ** (epoch + 1))
            vhat = v[i] / (1 - beta2 ** (epoch + 1))
            model.weights[i] = model.weights[i] - step * mhat / (np.sqrt(vhat) + adam_eps)

    train_err = _per_point_errors(model, bendings[train_idx], shapes[train_idx])
    val_err = _per_point_errors(model, bendings[val_idx], shapes[val_idx])
    model.fit_report = FitReport(
        train_mean_mm=float(train_err.mean()),
        val_mean_mm=float(val_err.mean()),
        val_max_mm=float(val_err.max()),
        epochs_run=epochs,
        n_train=len(train_idx),
        n_val=len(val_idx),
    )
    return model


def project_equal_arc(points: np.ndarray, n: int | None = None) -> np.ndarray:
    """Resample a polyline at equal cumulative arc-length parameters."""
    p = np.asarray(points, dtype=np.float64)
    if n is None:
        n = len(p)
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        return np.repeat(p[:1], n, axis=0)
    s = np.linspace(0.0, total, n)
    out = np.empty((n, 3))
    for k in range(3):
        out[:, k] = np.interp(s, cum, p[:, k])
    return out

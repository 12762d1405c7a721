"""Numpy MLP trained with focal loss and Adam.

Hidden layers use ReLU, the single output unit a sigmoid. Inputs are min-max
scaled with parameters fit on the training matrix and stored in the model.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .dataset import ScalerParams, apply_minmax, fit_minmax
from .errors import PseudogenError

PROB_EPS = 1e-7
MODEL_FORMAT = "pseudogen-mlp/1"


class TrainingError(PseudogenError):
    pass


@dataclass
class MlpConfig:
    hidden_sizes: list = field(default_factory=lambda: [64, 32])
    seed: int = 0


@dataclass
class TrainConfig:
    epochs: int = 250
    batch_size: int = 256
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0 < self.focal_alpha < 1 or self.focal_gamma < 0:
            raise ValueError("need focal_alpha in (0, 1) and focal_gamma >= 0")


def focal_loss(probs, labels, focal_alpha: float = 0.25, focal_gamma: float = 2.0) -> float:
    """Mean of -[a (1-p)^g y log p + (1-a) p^g (1-y) log(1-p)], p clamped to [1e-7, 1-1e-7]."""
    p = np.clip(np.asarray(probs, dtype=float), PROB_EPS, 1 - PROB_EPS)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} probabilities, {y.shape} labels")
    a, g = focal_alpha, focal_gamma
    per = -(a * (1 - p) ** g * y * np.log(p) + (1 - a) * p ** g * (1 - y) * np.log(1 - p))
    return float(per.mean())


def focal_loss_grad(probs, labels, focal_alpha: float = 0.25, focal_gamma: float = 2.0) -> np.ndarray:
    """d(focal_loss)/d(probs); zero where the clamp is active."""
    raw = np.asarray(probs, dtype=float)
    p = np.clip(raw, PROB_EPS, 1 - PROB_EPS)
    y = np.asarray(labels, dtype=float)
    a, g = focal_alpha, focal_gamma
    d_pos = -a * (-g * (1 - p) ** (g - 1) * np.log(p) + (1 - p) ** g / p) if g else -a / p
    d_neg = -(1 - a) * (g * p ** (g - 1) * np.log(1 - p) - p ** g / (1 - p)) if g else (1 - a) / (1 - p)
    grad = (y * d_pos + (1 - y) * d_neg) / p.size
    return np.where((raw > PROB_EPS) & (raw < 1 - PROB_EPS), grad, 0.0)


@dataclass
class MlpModel:
    weights: list
    biases: list
    scaler: ScalerParams
    mlp: MlpConfig
    train_cfg: TrainConfig
    loss_history: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.weights[0].shape[0]

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "layers": [
                {"shape": list(W.shape), "weight": W.ravel().tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights, self.biases)
            ],
            "scaler": self.scaler.to_dict(),
            "mlp": asdict(self.mlp),
            "train": asdict(self.train_cfg),
            "loss_history": self.loss_history,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {doc.get('format')!r}")
        Ws = [np.asarray(l["weight"], dtype=float).reshape(l["shape"]) for l in doc["layers"]]
        bs = [np.asarray(l["bias"], dtype=float) for l in doc["layers"]]
        return cls(Ws, bs, ScalerParams.from_dict(doc["scaler"]), MlpConfig(**doc["mlp"]),
                   TrainConfig(**doc["train"]), doc.get("loss_history", []))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def init_params(m: int, hidden_sizes, seed: int):
    rng = np.random.default_rng(seed)
    sizes = [m, *hidden_sizes, 1]
    Ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        Ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-bound, bound, size=fan_out))
    return Ws, bs


def forward(Ws, bs, Z):
    """Return output probabilities and the per-layer activations."""
    acts = [Z]
    h = Z
    for W, b in zip(Ws[:-1], bs[:-1]):
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    logits = (h @ Ws[-1] + bs[-1])[:, 0]
    return expit(logits), acts


def backward(Ws, acts, probs, labels, focal_alpha, focal_gamma):
    """Gradients of the mean focal loss with respect to every weight and bias."""
    dp = focal_loss_grad(probs, labels, focal_alpha, focal_gamma)
    delta = (dp * probs * (1 - probs))[:, None]
    gW, gb = [None] * len(Ws), [None] * len(Ws)
    for l in range(len(Ws) - 1, -1, -1):
        gW[l] = acts[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ Ws[l].T) * (acts[l] > 0)
    return gW, gb


def train(normals: np.ndarray, anomalies: np.ndarray, mlp: MlpConfig = None, cfg: TrainConfig = None) -> MlpModel:
    mlp = mlp or MlpConfig()
    cfg = cfg or TrainConfig()
    normals = np.asarray(normals, dtype=float)
    anomalies = np.asarray(anomalies, dtype=float)
    if normals.ndim != 2 or normals.shape[0] == 0:
        raise TrainingError("no normal training rows")
    if anomalies.ndim != 2 or anomalies.shape[0] == 0:
        raise TrainingError("no anomalous training rows")
    if anomalies.shape[1] != normals.shape[1]:
        raise TrainingError("normal and anomalous rows differ in feature count")

    X = np.vstack([normals, anomalies])
    y = np.concatenate([np.zeros(len(normals)), np.ones(len(anomalies))])
    scaler = fit_minmax(X)
    Z = apply_minmax(scaler, X)

    Ws, bs = init_params(X.shape[1], mlp.hidden_sizes, mlp.seed)
    params = Ws + bs
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(cfg.shuffle_seed)
    n = len(y)
    history = []
    t = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            probs, acts = forward(Ws, bs, Z[idx])
            loss = focal_loss(probs, y[idx], cfg.focal_alpha, cfg.focal_gamma)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            total += loss * len(idx)
            gW, gb = backward(Ws, acts, probs, y[idx], cfg.focal_alpha, cfg.focal_gamma)
            t += 1
            for k, (p, g) in enumerate(zip(params, gW + gb)):
                m1[k] = cfg.beta1 * m1[k] + (1 - cfg.beta1) * g
                m2[k] = cfg.beta2 * m2[k] + (1 - cfg.beta2) * g * g
                mhat = m1[k] / (1 - cfg.beta1 ** t)
                vhat = m2[k] / (1 - cfg.beta2 ** t)
                p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.adam_eps)
        history.append(total / n)
    return MlpModel(Ws, bs, scaler, mlp, cfg, history)


def predict(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.m:
        raise ValueError(f"dimension mismatch: model expects {model.m} features, got shape {X.shape}")
    probs, _ = forward(model.weights, model.biases, apply_minmax(model.scaler, X))
    return np.clip(probs, PROB_EPS, 1 - PROB_EPS)

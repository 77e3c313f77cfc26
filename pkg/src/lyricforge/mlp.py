"""Fully supervised MLP baseline: one hidden rectifier layer, logistic output.

Kept deliberately small and fully seeded so runs are reproducible; the k-NN
detector remains the primary classifier.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import HUMAN, SYNTHETIC
from .errors import ConfigError, DivergenceError, ValidationError

MIN_PER_CLASS = 10


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 32
    learning_rate: float = 0.1
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 32
    seed: int = 42

    def __post_init__(self):
        if self.hidden < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("hidden, epochs, and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class MlpModel:
    """input -> hidden (ReLU) -> 1 (sigmoid), trained with momentum SGD on BCE."""

    def __init__(self, w1, b1, w2, b2, mean, std):
        self.w1 = w1
        self.b1 = b1
        self.w2 = w2
        self.b2 = b2
        self.mean = mean
        self.std = std

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def _forward(self, x: np.ndarray):
        z1 = x @ self.w1 + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ self.w2 + self.b2
        return z1, a1, z2

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """Mean binary cross-entropy and its gradients w.r.t. every parameter.

        `x` is raw (unstandardized) input; `y` holds 0/1 targets.
        """
        x = self._standardize(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        n = x.shape[0]
        z1, a1, z2 = self._forward(x)
        # Stable BCE on logits: mean(max(z,0) - z*y + log(1 + exp(-|z|))).
        loss = float(np.mean(np.maximum(z2, 0.0) - z2 * y + np.log1p(np.exp(-np.abs(z2)))))
        p = _sigmoid(z2)
        dz2 = (p - y) / n
        grads = {
            "w2": a1.T @ dz2,
            "b2": dz2.sum(axis=0),
        }
        da1 = dz2 @ self.w2.T
        dz1 = da1 * (z1 > 0.0)
        grads["w1"] = x.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        return loss, grads

    def predict_proba(self, x: Sequence[Sequence[float]]) -> np.ndarray:
        x = self._standardize(np.asarray(x, dtype=np.float64))
        _, _, z2 = self._forward(x)
        return _sigmoid(z2).ravel()

    def predict(self, x: Sequence[Sequence[float]]) -> list[str]:
        return [SYNTHETIC if p >= 0.5 else HUMAN for p in self.predict_proba(x)]


def _as_binary(labels: Sequence[str]) -> np.ndarray:
    y = np.empty(len(labels), dtype=np.float64)
    for i, label in enumerate(labels):
        if label == SYNTHETIC:
            y[i] = 1.0
        elif label == HUMAN:
            y[i] = 0.0
        else:
            raise ValidationError(f"unknown label {label!r}")
    return y


def mlp_train(
    vectors: Sequence[Sequence[float]],
    labels: Sequence[str],
    cfg: MlpConfig = MlpConfig(),
) -> tuple[MlpModel, list[str]]:
    """Train the baseline and return (model, training-set predictions)."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("vectors must form a 2-D matrix")
    y = _as_binary(labels)
    if len(y) != x.shape[0]:
        raise ValidationError("labels and vectors must be aligned")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if min(n_pos, n_neg) < MIN_PER_CLASS:
        raise ValidationError(f"need at least {MIN_PER_CLASS} points per class, got {n_neg} human / {n_pos} synthetic")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    if np.any(std == 0.0):
        raise ValidationError("cannot standardize: a feature dimension is constant")

    rng = np.random.default_rng(cfg.seed)
    d = x.shape[1]
    model = MlpModel(
        w1=rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, cfg.hidden)),
        b1=np.zeros(cfg.hidden),
        w2=rng.normal(0.0, 1.0 / np.sqrt(cfg.hidden), size=(cfg.hidden, 1)),
        b2=np.zeros(1),
        mean=mean,
        std=std,
    )
    velocity = {name: np.zeros_like(getattr(model, name)) for name in ("w1", "b1", "w2", "b2")}
    n = x.shape[0]
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            loss, grads = model.loss_and_grads(x[batch], y[batch])
            if not np.isfinite(loss):
                raise DivergenceError("training loss is non-finite; lower the learning rate")
            for name, grad in grads.items():
                velocity[name] = cfg.momentum * velocity[name] - cfg.learning_rate * grad
                setattr(model, name, getattr(model, name) + velocity[name])
    return model, model.predict(x)

"""Small numpy models with flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _softmax_xent(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    prob = e / e.sum(axis=1, keepdims=True)
    n = len(y)
    loss = float(-np.mean(np.log(prob[np.arange(n), y] + 1e-300)))
    dlog = prob
    dlog[np.arange(n), y] -= 1.0
    return loss, dlog / n


@dataclass(frozen=True)
class LogisticRegression:
    """Multinomial logistic regression; parameters are [W (dim x C), b (C)] flattened."""

    dim: int
    classes: int

    @property
    def size(self) -> int:
        return (self.dim + 1) * self.classes

    def init(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.size)

    def _unpack(self, w):
        C = self.classes
        return w[: self.dim * C].reshape(self.dim, C), w[self.dim * C :]

    def logits(self, w, X):
        W, b = self._unpack(w)
        return X @ W + b

    def loss_grad(self, w, X, y) -> tuple[float, np.ndarray]:
        loss, d = _softmax_xent(self.logits(w, X), y)
        return loss, np.concatenate([(X.T @ d).ravel(), d.sum(axis=0)])

    def predict(self, w, X):
        return np.argmax(self.logits(w, X), axis=1)


@dataclass(frozen=True)
class MLP:
    """One tanh hidden layer."""

    dim: int
    hidden: int
    classes: int

    @property
    def size(self) -> int:
        return self.dim * self.hidden + self.hidden + self.hidden * self.classes + self.classes

    def init(self, rng: np.random.Generator) -> np.ndarray:
        W1 = rng.normal(scale=1.0 / np.sqrt(self.dim), size=(self.dim, self.hidden))
        W2 = rng.normal(scale=1.0 / np.sqrt(self.hidden), size=(self.hidden, self.classes))
        return np.concatenate([W1.ravel(), np.zeros(self.hidden), W2.ravel(), np.zeros(self.classes)])

    def _unpack(self, w):
        D, H, C = self.dim, self.hidden, self.classes
        o = 0
        W1 = w[o : o + D * H].reshape(D, H); o += D * H
        b1 = w[o : o + H]; o += H
        W2 = w[o : o + H * C].reshape(H, C); o += H * C
        return W1, b1, W2, w[o : o + C]

    def logits(self, w, X):
        W1, b1, W2, b2 = self._unpack(w)
        return np.tanh(X @ W1 + b1) @ W2 + b2

    def loss_grad(self, w, X, y) -> tuple[float, np.ndarray]:
        W1, b1, W2, b2 = self._unpack(w)
        a = np.tanh(X @ W1 + b1)
        loss, d = _softmax_xent(a @ W2 + b2, y)
        da = (d @ W2.T) * (1.0 - a * a)
        return loss, np.concatenate([(X.T @ da).ravel(), da.sum(axis=0), (a.T @ d).ravel(), d.sum(axis=0)])

    def predict(self, w, X):
        return np.argmax(self.logits(w, X), axis=1)


def make_model(name: str, dim: int, classes: int, hidden: int = 16):
    if name in ("logreg", "logistic"):
        return LogisticRegression(dim, classes)
    if name == "mlp":
        return MLP(dim, hidden, classes)
    raise ValueError(f"unknown model {name!r}")


def accuracy(model, w, X, y) -> float:
    return float(np.mean(model.predict(w, X) == y)) if len(y) else float("nan")

"""Feed-forward network: ReLU hidden layers, sigmoid output, binary cross-entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrainingSet, NonFiniteLoss, ShapeMismatch

SHALLOW = (64,)
DEEP = (128, 64, 32)


@dataclass(frozen=True)
class NnParams:
    hidden: tuple[int, ...] = SHALLOW
    dropout: float = 0.2
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ValueError("layer widths must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.activation != "relu":
            raise ValueError("only relu hidden activations are supported")
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def bce_from_logits(z, y) -> float:
    # log(1 + e^z) - y z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def glorot_init(sizes, rng):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X, masks=None):
    """Return the output logits and the per-layer activations needed for backprop.

    ``masks`` holds one inverted-dropout multiplier array per hidden layer.
    """
    acts = [X]
    h = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        if i == last:
            return z[:, 0], acts
        h = np.maximum(z, 0.0)
        if masks is not None:
            h = h * masks[i]
        acts.append(h)
    raise AssertionError("network has no layers")


def backward(weights, acts, logits, y, masks=None):
    """Gradients of the mean BCE with respect to every weight and bias."""
    n = len(y)
    delta = ((sigmoid(logits) - y) / n)[:, None]
    gW, gb = [None] * len(weights), [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        gW[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights[i].T
            # relu derivative (post-dropout activation is zero where relu was inactive)
            if masks is not None:
                delta = delta * masks[i - 1]
            delta = delta * (acts[i] > 0)
    return gW, gb


def loss_and_grads(weights, biases, X, y, masks=None):
    logits, acts = forward(weights, biases, X, masks)
    return bce_from_logits(logits, y), *backward(weights, acts, logits, y, masks)


class FeedForwardNet:
    family = "nn"

    def __init__(self, params: NnParams = NnParams(), seed: int = 0):
        self.params = params
        self.seed = seed
        self.loss_history: list[float] = []

    def init(self, n_features: int, rng: np.random.Generator) -> None:
        sizes = [n_features, *self.params.hidden, 1]
        self.weights, self.biases = glorot_init(sizes, rng)

    def fit(self, X, y) -> "FeedForwardNet":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(X)
        if n == 0:
            raise EmptyTrainingSet("network needs training rows")
        if len(y) != n:
            raise ShapeMismatch("X and y differ in length")
        p = self.params
        rng = np.random.default_rng(self.seed)
        self.init(X.shape[1], rng)
        vel_W = [np.zeros_like(W) for W in self.weights]
        vel_b = [np.zeros_like(b) for b in self.biases]
        keep = 1.0 - p.dropout
        self.loss_history = []
        for epoch in range(p.epochs):
            order = rng.permutation(n)
            total = 0.0
            for a in range(0, n, p.batch_size):
                batch = order[a : a + p.batch_size]
                masks = None
                if p.dropout > 0:
                    masks = [(rng.random((len(batch), h)) < keep) / keep for h in p.hidden]
                loss, gW, gb = loss_and_grads(self.weights, self.biases, X[batch], y[batch], masks)
                if not math.isfinite(loss):
                    raise NonFiniteLoss(f"loss became {loss} in epoch {epoch}")
                total += loss * len(batch)
                for i in range(len(self.weights)):
                    vel_W[i] = p.momentum * vel_W[i] - p.learning_rate * gW[i]
                    vel_b[i] = p.momentum * vel_b[i] - p.learning_rate * gb[i]
                    self.weights[i] += vel_W[i]
                    self.biases[i] += vel_b[i]
            self.loss_history.append(total / n)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights[0].shape[0]:
            raise ShapeMismatch(f"expected {self.weights[0].shape[0]} features, got {X.shape[1]}")
        logits, _ = forward(self.weights, self.biases, X)
        return sigmoid(logits)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        state = {"n_layers": np.array(len(self.weights))}
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            state[f"W{i}"], state[f"b{i}"] = W, b
        return state

    def set_state(self, state: dict) -> None:
        n = int(state["n_layers"])
        self.weights = [np.asarray(state[f"W{i}"], dtype=float) for i in range(n)]
        self.biases = [np.asarray(state[f"b{i}"], dtype=float) for i in range(n)]

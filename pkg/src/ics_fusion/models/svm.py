"""Linear SVM trained by stochastic subgradient descent on the hinge objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrainingSet, NonFiniteLoss, ShapeMismatch


@dataclass(frozen=True)
class SvmParams:
    penalty_C: float = 1.0
    epochs: int = 20
    batch_size: int = 32

    def __post_init__(self):
        if self.penalty_C <= 0:
            raise ValueError("penalty_C must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def hinge_objective(w, b, X, ys, lam) -> float:
    """lam/2 |w|^2 + mean(max(0, 1 - y (w.x + b))) with y in {-1, +1}."""
    margins = 1.0 - ys * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.maximum(margins, 0.0).mean())


class LinearSvm:
    """Mini-batch subgradient steps with step size 1 / (lam * t), lam = 1 / (C n).

    The bias is learned as the weight of a constant input feature, so it
    follows the same step schedule and shrinkage as ``w``. After each step
    the augmented weights are projected onto the ball of radius
    1/sqrt(lam), which contains the optimum. The fitted model is the
    average of the iterates from the second half of training.
    """

    family = "svm"

    def __init__(self, params: SvmParams = SvmParams(), seed: int = 0):
        self.params = params
        self.seed = seed
        self.objective_history: list[float] = []

    def fit(self, X, y) -> "LinearSvm":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        n = len(X)
        if n == 0:
            raise EmptyTrainingSet("SVM needs training rows")
        ys = np.where(y == 1, 1.0, -1.0)
        lam = 1.0 / (self.params.penalty_C * n)
        radius = 1.0 / math.sqrt(lam)
        Xa = np.hstack([X, np.ones((n, 1))])
        w = np.zeros(Xa.shape[1])
        w_avg = np.zeros_like(w)
        n_avg = 0
        rng = np.random.default_rng(self.seed)
        bs = self.params.batch_size
        avg_after = self.params.epochs * math.ceil(n / bs) // 2
        t = 0
        self.objective_history = []
        for _ in range(self.params.epochs):
            order = rng.permutation(n)
            for a in range(0, n, bs):
                t += 1
                batch = order[a : a + bs]
                Xb, yb = Xa[batch], ys[batch]
                eta = 1.0 / (lam * t)
                viol = yb * (Xb @ w) < 1.0
                w *= 1.0 - eta * lam
                if viol.any():
                    w += (eta / len(batch)) * (yb[viol] @ Xb[viol])
                norm = math.sqrt(float(w @ w))
                if norm > radius:
                    w *= radius / norm
                if t > avg_after:
                    n_avg += 1
                    w_avg += (w - w_avg) / n_avg
            obj = hinge_objective(w_avg if n_avg else w, 0.0, Xa, ys, lam)
            if not math.isfinite(obj):
                raise NonFiniteLoss(f"hinge objective diverged at step {t}")
            self.objective_history.append(obj)
        self.w, self.b = w_avg[:-1].copy(), float(w_avg[-1])
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.w):
            raise ShapeMismatch(f"expected {len(self.w)} features, got {X.shape[1]}")
        return X @ self.w + self.b

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0).astype(np.int64)

    def get_state(self) -> dict:
        return {"w": self.w, "b": np.array(self.b),
                "objective_history": np.array(self.objective_history)}

    def set_state(self, state: dict) -> None:
        self.w = np.asarray(state["w"], dtype=float)
        self.b = float(state["b"])
        self.objective_history = list(np.asarray(state["objective_history"]))

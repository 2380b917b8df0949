"""k-nearest-neighbour classifier with brute-force Euclidean search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrainingSet, ShapeMismatch


@dataclass(frozen=True)
class KnnParams:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _select_k(d2: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k nearest columns per row, ties broken by lower index."""
    kth = np.partition(d2, k - 1, axis=1)[:, k - 1 : k]
    less = d2 < kth
    need = k - less.sum(axis=1, keepdims=True)
    eq = d2 == kth
    return less | (eq & (np.cumsum(eq, axis=1) <= need))


class KnnModel:
    family = "knn"

    def __init__(self, params: KnnParams = KnnParams(), seed: int = 0):
        self.params = params
        self.seed = seed
        self.X = None
        self.y = None

    def fit(self, X, y) -> "KnnModel":
        X = np.asarray(X, dtype=float)
        if len(X) == 0:
            raise EmptyTrainingSet("kNN needs training rows")
        if self.params.k > len(X):
            raise ValueError(f"k={self.params.k} exceeds {len(X)} training rows")
        self.X, self.y = X, np.asarray(y, dtype=np.int64)
        self._sq = np.einsum("ij,ij->i", X, X)
        return self

    def _d2(self, Q):
        d2 = np.einsum("ij,ij->i", Q, Q)[:, None] - 2.0 * Q @ self.X.T + self._sq[None, :]
        return np.maximum(d2, 0.0, out=d2)

    def predict(self, Q, chunk: int | None = None) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[1] != self.X.shape[1]:
            raise ShapeMismatch(f"expected {self.X.shape[1]} features, got {Q.shape[1]}")
        k = self.params.k
        chunk = chunk or max(1, 4_000_000 // max(1, len(self.X)))
        out = np.empty(len(Q), dtype=np.int64)
        pos = self.y == 1
        for a in range(0, len(Q), chunk):
            d2 = self._d2(Q[a : a + chunk])
            chosen = _select_k(d2, k)
            dist = np.sqrt(d2)
            n1 = (chosen & pos).sum(axis=1)
            n0 = k - n1
            s1 = np.where(chosen & pos, dist, 0.0).sum(axis=1)
            s0 = np.where(chosen & ~pos, dist, 0.0).sum(axis=1)
            # majority, then smaller summed distance, then class 0
            out[a : a + chunk] = np.where(n1 != n0, n1 > n0, s1 < s0)
        return out

    def get_state(self) -> dict:
        return {"X": self.X, "y": self.y}

    def set_state(self, state: dict) -> None:
        self.fit(state["X"], state["y"])

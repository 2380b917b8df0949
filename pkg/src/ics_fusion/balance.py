"""SMOTE oversampling of the minority class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotTrainingSplit, TooFewMinority
from .features import FeatureMatrix

SYNTHETIC_SECOND = -1


@dataclass(frozen=True)
class SmoteParams:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0 < self.target_ratio <= 1:
            raise ValueError("target_ratio must lie in (0, 1]")


def nearest_neighbors(X: np.ndarray, k: int, chunk: int = 1024) -> np.ndarray:
    """Indices of each row's ``k`` nearest other rows, ordered by (distance, index)."""
    n = len(X)
    sq = np.einsum("ij,ij->i", X, X)
    out = np.empty((n, k), dtype=np.int64)
    for a in range(0, n, chunk):
        b = min(n, a + chunk)
        d = sq[a:b, None] - 2.0 * X[a:b] @ X.T + sq[None, :]
        np.maximum(d, 0.0, out=d)
        d[np.arange(b - a), np.arange(a, b)] = np.inf
        out[a:b] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def synthesize(X_min: np.ndarray, n_new: int, k: int, rng: np.random.Generator):
    """Create ``n_new`` points on segments between minority rows and their neighbours.

    Parents are visited round-robin so every minority row seeds an equal
    share. Returns ``(samples, parent_idx, neighbor_idx)``.
    """
    n = len(X_min)
    if n < 2:
        raise TooFewMinority(f"need at least 2 minority rows, have {n}")
    k = min(k, n - 1)
    nn = nearest_neighbors(X_min, k)
    parents = np.arange(n_new) % n
    picks = rng.integers(0, k, size=n_new)
    gaps = rng.random(n_new)
    neighbors = nn[parents, picks]
    base = X_min[parents]
    samples = base + gaps[:, None] * (X_min[neighbors] - base)
    return samples, parents, neighbors


def smote(matrix: FeatureMatrix, params: SmoteParams = SmoteParams()) -> FeatureMatrix:
    """Append synthetic minority rows until minority/majority reaches ``target_ratio``.

    Synthetic rows follow the original rows and carry second ``-1``.
    """
    if matrix.role == "test":
        raise NotTrainingSplit("SMOTE must only see training rows")
    y = matrix.y
    n_pos, n_neg = int((y == 1).sum()), int((y == 0).sum())
    minority = 1 if n_pos <= n_neg else 0
    n_min, n_maj = min(n_pos, n_neg), max(n_pos, n_neg)
    if n_min < 2:
        raise TooFewMinority(f"need at least 2 minority rows, have {n_min}")
    n_new = int(round(params.target_ratio * n_maj)) - n_min
    if n_new <= 0:
        return matrix
    rng = np.random.default_rng(params.seed)
    X_min = matrix.X[y == minority]
    samples, _, _ = synthesize(X_min, n_new, params.k_neighbors, rng)
    return FeatureMatrix(
        matrix.columns,
        np.vstack([matrix.X, samples]),
        np.concatenate([y, np.full(n_new, minority, dtype=y.dtype)]),
        np.concatenate([matrix.seconds, np.full(n_new, SYNTHETIC_SECOND, dtype=matrix.seconds.dtype)]),
        matrix.role,
    )

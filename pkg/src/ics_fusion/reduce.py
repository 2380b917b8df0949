"""Principal component analysis by eigendecomposition of the sample covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimensionMismatch

DEFAULT_RETAIN = 0.95


@dataclass
class PcaState:
    mean: np.ndarray
    components: np.ndarray  # (n_components, n_features), orthonormal rows
    explained_variance: np.ndarray
    total_variance: float

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "total_variance": self.total_variance,
            "n_components": self.n_components,
        }

    @classmethod
    def from_dict(cls, d) -> "PcaState":
        dim = len(d["mean"])
        comps = np.array(d["components"], dtype=float).reshape(-1, dim)
        return cls(np.array(d["mean"], dtype=float), comps,
                   np.array(d["explained_variance"], dtype=float), float(d["total_variance"]))


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude coordinate of each component made positive
    idx = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(len(vecs)), idx])
    signs[signs == 0] = 1.0
    return vecs * signs[:, None]


def fit_pca(X, retain: int | float = DEFAULT_RETAIN) -> PcaState:
    """Fit on training rows.

    ``retain`` is either a component count (int) or the cumulative
    explained-variance fraction to reach (float in (0, 1]).
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2:
        raise DegenerateInput("PCA needs at least 2 rows")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    vecs = _fix_signs(evecs[:, order].T)
    total = float(np.trace(cov))
    if total <= 0 or evals[0] <= 0:
        raise DegenerateInput("all rows are identical")

    if isinstance(retain, (int, np.integer)) and not isinstance(retain, bool):
        if not 1 <= retain <= d:
            raise ValueError(f"n_components must be in [1, {d}]")
        m = int(retain)
    else:
        frac = float(retain)
        if not 0 < frac <= 1:
            raise ValueError("variance fraction must be in (0, 1]")
        cum = np.cumsum(evals) / total
        # tolerate rounding in the cumulative sum
        m = int(np.searchsorted(cum, frac - 1e-12) + 1)
        m = min(max(m, 1), d)
    return PcaState(mean, vecs[:m].copy(), evals[:m].copy(), total)


def transform(X, state: PcaState) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(state.mean):
        raise DimensionMismatch(f"expected {len(state.mean)} columns, got {X.shape}")
    return (X - state.mean) @ state.components.T


def inverse_transform(Z, state: PcaState) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != state.n_components:
        raise DimensionMismatch(f"expected {state.n_components} columns, got {Z.shape}")
    return Z @ state.components + state.mean

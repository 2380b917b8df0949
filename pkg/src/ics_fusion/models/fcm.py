"""Fuzzy c-means clustering and the membership-augmented network ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BadFuzziness, EmptyTrainingSet, ShapeMismatch
from .nn import FeedForwardNet, NnParams


@dataclass(frozen=True)
class FcmParams:
    n_clusters: int = 4
    fuzziness: float = 2.0
    tolerance: float = 1e-5
    max_iter: int = 300

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.fuzziness <= 1:
            raise BadFuzziness(f"fuzziness m must be > 1, got {self.fuzziness}")


@dataclass(frozen=True)
class FcmEnsembleParams:
    fcm: FcmParams = FcmParams()
    nn: NnParams = NnParams()


@dataclass
class FcmResult:
    centroids: np.ndarray
    memberships: np.ndarray
    objective_history: list[float] = field(default_factory=list)
    n_iter: int = 0


def _sq_dist(X, V):
    d2 = np.einsum("ij,ij->i", X, X)[:, None] - 2.0 * X @ V.T + np.einsum("ij,ij->i", V, V)[None, :]
    return np.maximum(d2, 0.0)


def memberships(X, centroids, m: float) -> np.ndarray:
    """u_ij = 1 / sum_k (d_ij / d_ik)^(2/(m-1)); a point on a centroid belongs to it alone."""
    if m <= 1:
        raise BadFuzziness(f"fuzziness m must be > 1, got {m}")
    X = np.asarray(X, dtype=float)
    d2 = _sq_dist(X, centroids)
    zero = d2 <= 0.0
    # u_ij is proportional to d2_ij^(-1/(m-1)); normalise in log space to avoid overflow
    with np.errstate(divide="ignore"):
        logw = -np.log(np.where(zero, 1.0, d2)) / (m - 1.0)
    logw -= logw.max(axis=1, keepdims=True)
    u = np.exp(logw)
    u /= u.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    if hit.any():
        first = np.argmax(zero[hit], axis=1)
        u[hit] = 0.0
        u[np.nonzero(hit)[0], first] = 1.0
    return u


def centroids_from(X, U, m: float) -> np.ndarray:
    W = U ** m
    return (W.T @ X) / W.sum(axis=0)[:, None]


def fcm_objective(X, U, V, m: float) -> float:
    return float(((U ** m) * _sq_dist(X, V)).sum())


def fcm_fit(X, params: FcmParams = FcmParams(), seed: int = 0) -> FcmResult:
    """Alternate centroid and membership updates from a random fuzzy partition.

    Stops when no membership changes by more than ``tolerance`` or after
    ``max_iter`` rounds. ``objective_history`` is recorded after every
    membership update.
    """
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise EmptyTrainingSet("FCM needs rows")
    c, m = params.n_clusters, params.fuzziness
    rng = np.random.default_rng(seed)
    U = rng.random((len(X), c))
    U /= U.sum(axis=1, keepdims=True)
    history = []
    V = centroids_from(X, U, m)
    it = 0
    for it in range(1, params.max_iter + 1):
        U_new = memberships(X, V, m)
        history.append(fcm_objective(X, U_new, V, m))
        delta = np.abs(U_new - U).max()
        U = U_new
        V = centroids_from(X, U, m)
        if delta < params.tolerance:
            break
    return FcmResult(V, U, history, it)


class FcmEnsemble:
    """Network trained on the original features plus c fuzzy membership columns."""

    family = "fcm_ensemble"

    def __init__(self, params: FcmEnsembleParams = FcmEnsembleParams(), seed: int = 0):
        self.params = params
        self.seed = seed

    def widen(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.centroids.shape[1]:
            raise ShapeMismatch(f"expected {self.centroids.shape[1]} features, got {X.shape[1]}")
        return np.hstack([X, memberships(X, self.centroids, self.params.fcm.fuzziness)])

    def fit(self, X, y) -> "FcmEnsemble":
        seq = np.random.SeedSequence(self.seed).spawn(2)
        fcm_seed = int(seq[0].generate_state(1)[0])
        nn_seed = int(seq[1].generate_state(1)[0])
        self.clustering = fcm_fit(X, self.params.fcm, fcm_seed)
        self.centroids = self.clustering.centroids
        self.net = FeedForwardNet(self.params.nn, nn_seed).fit(self.widen(X), y)
        return self

    def predict_proba(self, X) -> np.ndarray:
        return self.net.predict_proba(self.widen(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        state = {"centroids": self.centroids}
        state.update({f"net.{k}": v for k, v in self.net.get_state().items()})
        return state

    def set_state(self, state: dict) -> None:
        self.centroids = np.asarray(state["centroids"], dtype=float)
        self.net = FeedForwardNet(self.params.nn)
        self.net.set_state({k[4:]: v for k, v in state.items() if k.startswith("net.")})

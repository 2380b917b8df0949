"""Cross-validated grid search that ranks by attack recall."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..models import make_model, params_from_dict
from .metrics import confusion_matrix, recall, weighted_precision
from .split import stratified_folds

# prepare(X_train, y_train, X_val, seed) -> (X_train', y_train', X_val')
Prepare = Callable[[np.ndarray, np.ndarray, np.ndarray, int], tuple]


def expand_grid(grid: dict[str, list] | list[dict] | None) -> list[dict]:
    """Cartesian product of a ``{param: [values]}`` mapping, in key order.

    A list of dicts is taken as an explicit list of candidates.
    """
    if not grid:
        return [{}]
    if isinstance(grid, list):
        return [dict(g) for g in grid]
    keys = list(grid)
    for key in keys:
        if not isinstance(grid[key], list) or not grid[key]:
            raise ValueError(f"grid entry {key!r} must be a non-empty list")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class CandidateScore:
    params: dict
    recalls: list[float] = field(default_factory=list)
    precisions: list[float] = field(default_factory=list)

    @property
    def mean_recall(self) -> float:
        return float(np.mean(self.recalls)) if self.recalls else 0.0

    @property
    def mean_precision(self) -> float:
        return float(np.mean(self.precisions)) if self.precisions else 0.0


@dataclass
class SearchResult:
    best: dict
    scores: list[CandidateScore]
    folds: list[np.ndarray]
    evaluated: list[np.ndarray]  # validation rows actually scored, per fold


def select_best(scores: list[CandidateScore]) -> int:
    """Highest mean recall, then highest mean weighted precision, then earliest."""
    best = 0
    for i, s in enumerate(scores[1:], start=1):
        b = scores[best]
        if (s.mean_recall, s.mean_precision) > (b.mean_recall, b.mean_precision):
            best = i
    return best


def grid_search(family: str, grid, X, y, k: int = 3, seed: int = 0,
                prepare: Prepare | None = None) -> SearchResult:
    candidates = expand_grid(grid)
    for c in candidates:
        params_from_dict(family, c)  # fail fast on bad keys
    if len(candidates) == 1:
        return SearchResult(candidates[0], [CandidateScore(candidates[0])], [], [])
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    ss = np.random.SeedSequence(seed)
    fold_seq, model_seq = ss.spawn(2)
    folds = stratified_folds(y, k, np.random.default_rng(fold_seq))
    fold_seeds = [int(s.generate_state(1)[0]) for s in model_seq.spawn(k)]
    scores = [CandidateScore(c) for c in candidates]
    evaluated = []
    for f, val in enumerate(folds):
        train = np.concatenate([folds[g] for g in range(k) if g != f])
        # leakage guard: validation rows never reach fitting
        assert np.intersect1d(train, val).size == 0
        X_tr, y_tr, X_val = X[train], y[train], X[val]
        if prepare is not None:
            X_tr, y_tr, X_val = prepare(X_tr, y_tr, X_val, fold_seeds[f])
        evaluated.append(val)
        for s in scores:
            model = make_model(family, s.params, fold_seeds[f]).fit(X_tr, y_tr)
            cm = confusion_matrix(y[val], model.predict(X_val))
            s.recalls.append(recall(cm))
            s.precisions.append(weighted_precision(cm))
    return SearchResult(dict(scores[select_best(scores)].params), scores, folds, evaluated)

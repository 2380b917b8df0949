"""Train/test splitting and stratified folds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FoldTooSmall, TooFewRows

STRATIFIED = "stratified_random"
CHRONOLOGICAL = "chronological"
MIN_PER_CLASS = 5


@dataclass(frozen=True)
class SplitSpec:
    ratio: float = 0.8
    mode: str = STRATIFIED
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError(f"split ratio must lie in (0, 1), got {self.ratio}")
        if self.mode not in (STRATIFIED, CHRONOLOGICAL):
            raise ValueError(f"unknown split mode {self.mode!r}")


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray


def split(y, spec: SplitSpec = SplitSpec(), seconds=None) -> Split:
    """Row indices for train and test, each sorted ascending.

    Stratified mode keeps ``round(ratio * n_c)`` rows of each class for
    training. Chronological mode takes the earliest ``ratio`` share of
    seconds (by ``seconds`` if given, else by row order).
    """
    y = np.asarray(y)
    n = len(y)
    if spec.mode == CHRONOLOGICAL:
        order = np.arange(n) if seconds is None else np.argsort(np.asarray(seconds), kind="stable")
        cut = int(round(spec.ratio * n))
        if cut == 0 or cut == n:
            raise TooFewRows(f"chronological split of {n} rows leaves an empty side")
        return Split(np.sort(order[:cut]), np.sort(order[cut:]))
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < MIN_PER_CLASS:
            raise TooFewRows(f"class {cls} has {len(idx)} rows, need {MIN_PER_CLASS}")
        idx = rng.permutation(idx)
        k = int(round(spec.ratio * len(idx)))
        train.append(idx[:k])
        test.append(idx[k:])
    return Split(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)))


def stratified_folds(y, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Partition row indices into ``k`` folds with near-equal class shares.

    Each class is shuffled and dealt round-robin, so fold sizes per class
    differ by at most one. Raises FoldTooSmall when a fold gets no positive.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    y = np.asarray(y)
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for f in range(k):
            folds[f].append(idx[f::k])
    out = [np.sort(np.concatenate(parts)) for parts in folds]
    for f, idx in enumerate(out):
        if not (y[idx] == 1).any():
            raise FoldTooSmall(f"fold {f} has no positive rows")
    return out

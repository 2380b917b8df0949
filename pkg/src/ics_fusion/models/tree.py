"""Binary CART decision trees (Gini impurity) and random forests built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrainingSet, ShapeMismatch

LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = 12
    min_samples_split: int = 2
    criterion: str = "gini"

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.criterion != "gini":
            raise ValueError("only the gini criterion is supported")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 25
    max_depth: int | None = 12
    min_samples_split: int = 2
    features_per_split: int | None = None  # default ceil(sqrt(d))
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")


def gini(pos, n):
    p = pos / n
    return 2.0 * p * (1.0 - p)


def best_split(X, y, idx, features):
    """Best (feature, threshold, weighted_gini) over ``features`` for rows ``idx``.

    Candidate thresholds are midpoints between consecutive distinct values.
    Ties keep the earlier feature and the smaller threshold. Returns None
    when no feature has two distinct values.
    """
    yn = y[idx]
    n = len(idx)
    total_pos = yn.sum()
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    best = None
    best_w = math.inf
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        pl = np.cumsum(yn[order])[:-1].astype(float)
        pr = total_pos - pl
        w = (nl * gini(pl, nl) + nr * gini(pr, nr)) / n
        w[~valid] = math.inf
        i = int(np.argmin(w))
        if w[i] < best_w:
            lo, hi = xs[i], xs[i + 1]
            thr = (lo + hi) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best, best_w = (int(f), float(thr)), float(w[i])
    if best is None:
        return None
    return best[0], best[1], best_w


class DecisionTree:
    """Array-backed CART tree; ``x[feature] <= threshold`` goes left."""

    family = "tree"

    def __init__(self, params: TreeParams = TreeParams(), seed: int = 0):
        self.params = params
        self.seed = seed

    def fit(self, X, y, features_per_split: int | None = None,
            rng: np.random.Generator | None = None, sample_idx=None) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            raise EmptyTrainingSet("tree needs training rows")
        n, d = X.shape
        self.n_features = d
        m = d if features_per_split is None else min(features_per_split, d)
        idx0 = np.arange(n) if sample_idx is None else np.asarray(sample_idx)
        max_depth = self.params.max_depth
        min_split = self.params.min_samples_split

        feature, threshold, left, right, value, count = [], [], [], [], [], []
        importances = np.zeros(d)

        def new_node(idx):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(float(y[idx].mean()))
            count.append(len(idx))
            return len(feature) - 1

        root = new_node(idx0)
        stack = [(root, idx0, 0)]
        while stack:
            node, idx, depth = stack.pop()
            nn = len(idx)
            pos = y[idx].sum()
            if pos == 0 or pos == nn or nn < min_split or (max_depth is not None and depth >= max_depth):
                continue
            if m < d:
                feats = np.sort(rng.choice(d, size=m, replace=False))
            else:
                feats = range(d)
            split = best_split(X, y, idx, feats)
            if split is None:
                continue
            f, thr, w = split
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            importances[f] += nn * gini(pos, nn) - nn * w
            feature[node], threshold[node] = f, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            # right pushed first so the left subtree is built first
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value, dtype=float)
        self.count = np.array(count, dtype=np.int64)
        total = importances.sum()
        self.feature_importances_ = importances / total if total > 0 else np.full(d, 1.0 / d)
        return self

    def apply(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            f = self.feature[cur]
            goes_left = X[rows, f] <= self.threshold[cur]
            node[rows] = np.where(goes_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] != LEAF
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict(self, X) -> np.ndarray:
        # leaf ties favour the attack class
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def get_state(self) -> dict:
        return {
            "feature": self.feature, "threshold": self.threshold, "left": self.left,
            "right": self.right, "value": self.value, "count": self.count,
            "importances": self.feature_importances_,
        }

    def set_state(self, state: dict) -> None:
        for key in ("feature", "threshold", "left", "right", "value", "count"):
            setattr(self, key, np.asarray(state[key]))
        self.feature_importances_ = np.asarray(state["importances"])
        self.n_features = len(self.feature_importances_)


class RandomForest:
    family = "forest"

    def __init__(self, params: ForestParams = ForestParams(), seed: int = 0):
        self.params = params
        self.seed = seed
        self.trees: list[DecisionTree] = []

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            raise EmptyTrainingSet("forest needs training rows")
        n, d = X.shape
        p = self.params
        m = p.features_per_split or math.ceil(math.sqrt(d))
        if m > d:
            raise ValueError(f"features_per_split={m} exceeds {d} features")
        tree_params = TreeParams(p.max_depth, p.min_samples_split)
        self.trees = []
        for child in np.random.SeedSequence(self.seed).spawn(p.n_trees):
            rng = np.random.default_rng(child)
            sample = rng.integers(0, n, size=n) if p.bootstrap else np.arange(n)
            tree = DecisionTree(tree_params).fit(X, y, m, rng, np.sort(sample))
            self.trees.append(tree)
        imp = np.mean([t.feature_importances_ for t in self.trees], axis=0)
        self.feature_importances_ = imp / imp.sum()
        return self

    def votes(self, X) -> np.ndarray:
        return np.sum([t.predict(X) for t in self.trees], axis=0)

    def predict_proba(self, X) -> np.ndarray:
        return self.votes(X) / len(self.trees)

    def predict(self, X) -> np.ndarray:
        # vote ties go to the attack class
        return (2 * self.votes(X) >= len(self.trees)).astype(np.int64)

    def get_state(self) -> dict:
        state = {"n_trees": np.array(len(self.trees)), "importances": self.feature_importances_}
        for i, t in enumerate(self.trees):
            for k, v in t.get_state().items():
                state[f"tree{i}.{k}"] = v
        return state

    def set_state(self, state: dict) -> None:
        self.trees = []
        for i in range(int(state["n_trees"])):
            t = DecisionTree(TreeParams(self.params.max_depth, self.params.min_samples_split))
            t.set_state({k.split(".", 1)[1]: v for k, v in state.items() if k.startswith(f"tree{i}.")})
            self.trees.append(t)
        self.feature_importances_ = np.asarray(state["importances"])

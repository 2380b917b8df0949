"""From fused frames to a model-ready matrix.

Identifier columns are dropped, categorical columns are one-hot encoded
against a vocabulary learned from training rows, and every numeric column
is min-max scaled with bounds learned from training rows.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import EmptySelection
from .fusion import CATEGORICAL, NUMERIC, FrameTable

INDICATOR = "indicator"

DEFAULT_DROP = ("*.orig_addr*", "*.resp_addr*", "*.uid*", "*.orig_port*", "*.resp_port*")

DATASET_CONFIGS = {
    "conn_only": ("conn",),
    "cip_only": ("cip",),
    "proc_only": ("proc",),
    "conn_cip": ("conn", "cip"),
    "conn_proc": ("conn", "proc"),
    "conn_cip_proc": ("conn", "cip", "proc"),
}
CONFIG_ALIASES = {
    "network_only": "conn_cip",
    "process_only": "proc_only",
    "combined_conn_cip": "conn_cip",
    "combined_conn_proc": "conn_proc",
    "combined_all": "conn_cip_proc",
}
SINGLE_SOURCE = ("conn_only", "cip_only", "proc_only")


def canonical_config(name: str) -> str:
    name = CONFIG_ALIASES.get(name, name)
    if name not in DATASET_CONFIGS:
        raise ValueError(f"unknown dataset config {name!r}")
    return name


@dataclass(frozen=True)
class Column:
    name: str
    source: str
    kind: str


@dataclass
class FeatureMatrix:
    columns: list[Column]
    X: np.ndarray
    y: np.ndarray
    seconds: np.ndarray
    role: str | None = None  # "train", "test" or None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise ValueError(f"matrix shape {self.X.shape} does not match {len(self.columns)} columns")
        if not (len(self.X) == len(self.y) == len(self.seconds)):
            raise ValueError("rows, labels and seconds differ in length")

    def __len__(self):
        return len(self.y)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def rows(self, idx, role: str | None = None) -> "FeatureMatrix":
        return FeatureMatrix(self.columns, self.X[idx], self.y[idx], self.seconds[idx],
                             role if role is not None else self.role)

    def with_role(self, role: str | None) -> "FeatureMatrix":
        return replace(self, role=role)


def drop_identifiers(table: FrameTable, patterns: Sequence[str] = DEFAULT_DROP) -> FrameTable:
    """Remove features whose name matches any glob in ``patterns``."""
    doomed = [n for n in table.feature_names if any(fnmatch.fnmatchcase(n, p) for p in patterns)]
    return table.drop(doomed) if doomed else table


def fit_vocabulary(symbols) -> list[str]:
    return sorted({str(s) for s in symbols if s is not None})


def one_hot(symbols, vocabulary: Sequence[str]) -> np.ndarray:
    """One column per vocabulary symbol; unseen symbols give an all-zero row."""
    pos = {s: i for i, s in enumerate(vocabulary)}
    out = np.zeros((len(symbols), len(vocabulary)))
    for r, s in enumerate(symbols):
        j = pos.get(None if s is None else str(s))
        if j is not None:
            out[r, j] = 1.0
    return out


@dataclass
class NormalizerState:
    mins: np.ndarray
    maxs: np.ndarray
    fitted_on: int

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist(), "fitted_on": self.fitted_on}

    @classmethod
    def from_dict(cls, d) -> "NormalizerState":
        return cls(np.array(d["min"], dtype=float), np.array(d["max"], dtype=float), d["fitted_on"])


def fit_minmax(X, identity_mask=None) -> NormalizerState:
    """Per-column bounds from training rows; masked columns keep [0, 1] bounds."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("cannot fit normalizer on zero rows")
    mins, maxs = X.min(axis=0), X.max(axis=0)
    if identity_mask is not None:
        mask = np.asarray(identity_mask, dtype=bool)
        mins = np.where(mask, 0.0, mins)
        maxs = np.where(mask, 1.0, maxs)
    return NormalizerState(mins, maxs, len(X))


def apply_minmax(X, state: NormalizerState) -> np.ndarray:
    """Scale to [0, 1]; constant training columns map to 0, out-of-range values clip."""
    X = np.asarray(X, dtype=float)
    span = state.maxs - state.mins
    const = span <= 0
    out = (X - state.mins) / np.where(const, 1.0, span)
    out[:, const] = 0.0
    return np.clip(out, 0.0, 1.0)


@dataclass
class FeatureEncoder:
    """Training-fitted encoding from a :class:`FrameTable` to a :class:`FeatureMatrix`."""

    drop_patterns: tuple[str, ...] = DEFAULT_DROP
    dropped: list[str] = field(default_factory=list)
    vocabularies: dict[str, list[str]] = field(default_factory=dict)
    columns: list[Column] = field(default_factory=list)
    normalizer: NormalizerState | None = None
    _inputs: list[tuple[str, str, str]] = field(default_factory=list, repr=False)

    def fit(self, table: FrameTable, rows) -> "FeatureEncoder":
        rows = np.asarray(rows)
        kept = drop_identifiers(table, self.drop_patterns)
        self.dropped = [n for n in table.feature_names if n not in kept.columns]
        self.vocabularies, self.columns, self._inputs = {}, [], []
        for name in kept.feature_names:
            meta = kept.meta[name]
            self._inputs.append((name, meta.source, meta.kind))
            if meta.kind == CATEGORICAL:
                vocab = fit_vocabulary(kept.columns[name][rows])
                self.vocabularies[name] = vocab
                self.columns.extend(Column(f"{name}={s}", meta.source, INDICATOR) for s in vocab)
            else:
                self.columns.append(Column(name, meta.source, NUMERIC))
        raw = self._raw(kept, rows)
        self.normalizer = fit_minmax(raw, [c.kind == INDICATOR for c in self.columns])
        return self

    def _raw(self, table: FrameTable, rows) -> np.ndarray:
        blocks = []
        for name, _, kind in self._inputs:
            col = table.columns[name][rows]
            if kind == CATEGORICAL:
                blocks.append(one_hot(col, self.vocabularies[name]))
            else:
                blocks.append(np.asarray(col, dtype=float)[:, None])
        if not blocks:
            return np.zeros((len(rows), 0))
        return np.hstack(blocks)

    def transform(self, table: FrameTable, rows=None, role: str | None = None) -> FeatureMatrix:
        if self.normalizer is None:
            raise RuntimeError("encoder is not fitted")
        rows = np.arange(len(table)) if rows is None else np.asarray(rows)
        X = apply_minmax(self._raw(table, rows), self.normalizer)
        labels = table.labels if table.labels is not None else np.zeros(len(table), dtype=np.int64)
        return FeatureMatrix(list(self.columns), X, labels[rows].astype(np.int64),
                             table.seconds[rows], role)

    def to_dict(self) -> dict:
        return {
            "drop_patterns": list(self.drop_patterns),
            "dropped": self.dropped,
            "inputs": [list(t) for t in self._inputs],
            "vocabularies": self.vocabularies,
            "columns": [{"name": c.name, "source": c.source, "kind": c.kind} for c in self.columns],
            "normalizer": self.normalizer.to_dict() if self.normalizer else None,
        }

    @classmethod
    def from_dict(cls, d) -> "FeatureEncoder":
        enc = cls(tuple(d["drop_patterns"]), list(d["dropped"]),
                  {k: list(v) for k, v in d["vocabularies"].items()},
                  [Column(**c) for c in d["columns"]],
                  NormalizerState.from_dict(d["normalizer"]) if d["normalizer"] else None)
        enc._inputs = [tuple(t) for t in d["inputs"]]
        return enc


def select_config(matrix: FeatureMatrix, config: str) -> FeatureMatrix:
    """Keep only the columns whose source belongs to ``config``."""
    sources = DATASET_CONFIGS[canonical_config(config)]
    keep = [j for j, c in enumerate(matrix.columns) if c.source in sources]
    if not keep:
        raise EmptySelection(f"no columns from {sources} for config {config!r}")
    return FeatureMatrix([matrix.columns[j] for j in keep], matrix.X[:, keep], matrix.y,
                         matrix.seconds, matrix.role)

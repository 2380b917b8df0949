"""Classifier families sharing a ``fit(X, y)`` / ``predict(X)`` contract."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .fcm import FcmEnsemble, FcmEnsembleParams, FcmParams, fcm_fit, memberships
from .knn import KnnModel, KnnParams
from .nn import DEEP, SHALLOW, FeedForwardNet, NnParams
from .svm import LinearSvm, SvmParams
from .tree import DecisionTree, ForestParams, RandomForest, TreeParams

ARTIFACT_VERSION = 1

FAMILIES = {
    "knn": (KnnModel, KnnParams),
    "tree": (DecisionTree, TreeParams),
    "forest": (RandomForest, ForestParams),
    "svm": (LinearSvm, SvmParams),
    "nn": (FeedForwardNet, NnParams),
    "fcm_ensemble": (FcmEnsemble, FcmEnsembleParams),
}


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def params_from_dict(family: str, d: dict | None = None):
    """Build the family's hyperparameter dataclass; unknown keys raise ValueError."""
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}")
    d = dict(d or {})
    pcls = FAMILIES[family][1]
    if family == "fcm_ensemble":
        fcm_kw, nn_kw = dict(d.pop("fcm", {})), dict(d.pop("nn", {}))
        for key, value in d.items():
            if key in _fields(FcmParams):
                fcm_kw[key] = value
            elif key in _fields(NnParams):
                nn_kw[key] = value
            else:
                raise ValueError(f"unknown fcm_ensemble parameter {key!r}")
        return FcmEnsembleParams(FcmParams(**fcm_kw), NnParams(**nn_kw))
    unknown = set(d) - _fields(pcls)
    if unknown:
        raise ValueError(f"unknown {family} parameters: {sorted(unknown)}")
    return pcls(**d)


def params_to_dict(params) -> dict:
    def conv(v):
        if dataclasses.is_dataclass(v):
            return {k: conv(x) for k, x in dataclasses.asdict(v).items()}
        if isinstance(v, tuple):
            return list(v)
        return v
    return conv(params)


def make_model(family: str, params=None, seed: int = 0):
    cls, pcls = FAMILIES[family]
    if params is None or isinstance(params, dict):
        params = params_from_dict(family, params)
    return cls(params, seed=seed)


def save_model(model, directory: str | Path, extra: dict | None = None) -> Path:
    """Write ``model.json`` (manifest) and ``model.npz`` (parameter payload)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": ARTIFACT_VERSION,
        "family": model.family,
        "params": params_to_dict(model.params),
        "seed": model.seed if hasattr(model, "seed") else 0,
    }
    manifest.update(extra or {})
    (directory / "model.json").write_text(json.dumps(manifest, indent=2) + "\n")
    with open(directory / "model.npz", "wb") as fh:
        np.savez(fh, **{k: np.asarray(v) for k, v in model.get_state().items()})
    return directory


def load_model(directory: str | Path):
    directory = Path(directory)
    manifest = json.loads((directory / "model.json").read_text())
    if manifest.get("format_version") != ARTIFACT_VERSION:
        raise ValueError(f"unsupported model format {manifest.get('format_version')}")
    model = make_model(manifest["family"], manifest["params"], manifest.get("seed", 0))
    with np.load(directory / "model.npz") as data:
        model.set_state({k: data[k] for k in data.files})
    return model, manifest


__all__ = [
    "DEEP", "SHALLOW", "FAMILIES", "DecisionTree", "FcmEnsemble", "FcmEnsembleParams",
    "FcmParams", "FeedForwardNet", "ForestParams", "KnnModel", "KnnParams", "LinearSvm",
    "NnParams", "RandomForest", "SvmParams", "TreeParams", "fcm_fit", "load_model",
    "make_model", "memberships", "params_from_dict", "params_to_dict", "save_model",
]

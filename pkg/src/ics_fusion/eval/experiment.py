"""The dataset-config x model-family x SMOTE matrix on one shared split."""

from __future__ import annotations

import json
import logging
import time
import traceback
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ..balance import SmoteParams, smote
from ..errors import ConfigError
from ..features import (
    DATASET_CONFIGS, DEFAULT_DROP, FeatureEncoder, FeatureMatrix, canonical_config, select_config,
)
from ..fusion import FrameTable
from ..models import FAMILIES, make_model, params_from_dict
from ..reduce import DEFAULT_RETAIN, PcaState, fit_pca, transform
from .metrics import ConfusionMatrix, confusion_matrix
from .search import expand_grid, grid_search
from .split import CHRONOLOGICAL, STRATIFIED, Split, SplitSpec, split

log = logging.getLogger(__name__)

ALL_CONFIGS = list(DATASET_CONFIGS)
ALL_MODELS = ["knn", "tree", "forest", "svm", "nn", "fcm_ensemble"]
SMOTE_MODES = {"off": [False], "on": [True], "both": [False, True]}

DEFAULT_GRIDS = {
    "knn": {"k": [3, 5]},
    "tree": {"max_depth": [8, 12]},
    "forest": {"n_trees": [25]},
    "svm": {"penalty_C": [0.1, 1.0]},
    "nn": {"hidden": [[64], [128, 64, 32]]},
    "fcm_ensemble": {"n_clusters": [4]},
}


@dataclass
class ExperimentConfig:
    dataset: dict = field(default_factory=dict)   # {"csv", "manifest"} or {"raw_dir"}
    drop_list: list[str] = field(default_factory=lambda: list(DEFAULT_DROP))
    split: SplitSpec = field(default_factory=SplitSpec)
    smote: SmoteParams = field(default_factory=SmoteParams)
    pca: bool = True
    pca_retain: float | int = DEFAULT_RETAIN
    grids: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_GRIDS)))
    folds: int = 3
    seed: int = 0
    configs: list[str] = field(default_factory=lambda: list(ALL_CONFIGS))
    models: list[str] = field(default_factory=lambda: list(ALL_MODELS))
    smote_modes: list[bool] = field(default_factory=lambda: [False, True])

    @classmethod
    def from_dict(cls, d: dict | None, path: str | None = None) -> "ExperimentConfig":
        d = dict(d or {})
        cfg = cls()
        base = Path(path).parent if path else Path(".")

        def fail(key, msg):
            raise ConfigError(key, msg, path)

        known = {"dataset", "drop_list", "split", "smote", "pca", "grids", "folds", "seed",
                 "configs", "models"}
        for key in d:
            if key not in known:
                fail(key, "unknown key")
        if "seed" in d:
            if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
                fail("seed", f"must be an integer, got {d['seed']!r}")
            cfg.seed = d["seed"]
        if "dataset" in d:
            ds = d["dataset"]
            if not isinstance(ds, dict):
                fail("dataset", "must be an object")
            extra = set(ds) - {"csv", "manifest", "raw_dir"}
            if extra:
                fail(f"dataset.{sorted(extra)[0]}", "unknown key")
            cfg.dataset = {k: str((base / v) if not Path(v).is_absolute() else v) for k, v in ds.items()}
        if "drop_list" in d:
            if not isinstance(d["drop_list"], list) or not all(isinstance(p, str) for p in d["drop_list"]):
                fail("drop_list", "must be a list of glob strings")
            cfg.drop_list = list(d["drop_list"])
        if "split" in d:
            sp = dict(d["split"])
            extra = set(sp) - {"ratio", "mode"}
            if extra:
                fail(f"split.{sorted(extra)[0]}", "unknown key")
            ratio = sp.get("ratio", 0.8)
            if not isinstance(ratio, (int, float)) or not 0 < ratio < 1:
                fail("split.ratio", f"must lie in (0, 1), got {ratio!r}")
            mode = sp.get("mode", STRATIFIED)
            if mode not in (STRATIFIED, CHRONOLOGICAL):
                fail("split.mode", f"must be {STRATIFIED} or {CHRONOLOGICAL}, got {mode!r}")
            cfg.split = SplitSpec(float(ratio), mode, cfg.seed)
        else:
            cfg.split = SplitSpec(seed=cfg.seed)
        if "smote" in d:
            sm = dict(d["smote"])
            extra = set(sm) - {"k_neighbors", "target_ratio"}
            if extra:
                fail(f"smote.{sorted(extra)[0]}", "unknown key")
            try:
                cfg.smote = SmoteParams(int(sm.get("k_neighbors", 5)), float(sm.get("target_ratio", 1.0)))
            except (TypeError, ValueError) as exc:
                fail("smote", str(exc))
        if "pca" in d:
            pc = d["pca"]
            if isinstance(pc, bool):
                cfg.pca = pc
            elif isinstance(pc, dict):
                extra = set(pc) - {"enabled", "retain"}
                if extra:
                    fail(f"pca.{sorted(extra)[0]}", "unknown key")
                cfg.pca = bool(pc.get("enabled", True))
                retain = pc.get("retain", DEFAULT_RETAIN)
                if isinstance(retain, bool) or not isinstance(retain, (int, float)) or retain <= 0 \
                        or (isinstance(retain, float) and retain > 1):
                    fail("pca.retain", f"must be a count >= 1 or a fraction in (0, 1], got {retain!r}")
                cfg.pca_retain = retain
            else:
                fail("pca", "must be a boolean or an object")
        if "grids" in d:
            if not isinstance(d["grids"], dict):
                fail("grids", "must be an object keyed by model family")
            for fam, grid in d["grids"].items():
                if fam not in FAMILIES:
                    fail(f"grids.{fam}", "unknown model family")
                try:
                    for cand in expand_grid(grid):
                        params_from_dict(fam, cand)
                except (TypeError, ValueError) as exc:
                    fail(f"grids.{fam}", str(exc))
                cfg.grids[fam] = grid
        if "folds" in d:
            if not isinstance(d["folds"], int) or d["folds"] < 2:
                fail("folds", f"must be an integer >= 2, got {d['folds']!r}")
            cfg.folds = d["folds"]
        if "configs" in d:
            cfg.configs = parse_configs(d["configs"], lambda m: fail("configs", m))
        if "models" in d:
            cfg.models = parse_models(d["models"], lambda m: fail("models", m))
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}", str(path)) from None
        if not isinstance(raw, dict):
            raise ConfigError("<file>", "top level must be an object", str(path))
        return cls.from_dict(raw, str(path))

    def to_dict(self) -> dict:
        return {
            "dataset": dict(self.dataset),
            "drop_list": list(self.drop_list),
            "split": {"ratio": self.split.ratio, "mode": self.split.mode},
            "smote": {"k_neighbors": self.smote.k_neighbors, "target_ratio": self.smote.target_ratio},
            "pca": {"enabled": self.pca, "retain": self.pca_retain},
            "grids": self.grids,
            "folds": self.folds,
            "seed": self.seed,
            "configs": list(self.configs),
            "models": list(self.models),
            "smote_modes": ["on" if s else "off" for s in self.smote_modes],
        }


def parse_configs(value, fail=None) -> list[str]:
    items = value.split(",") if isinstance(value, str) else list(value)
    out = []
    for item in items:
        try:
            out.append(canonical_config(str(item).strip()))
        except ValueError as exc:
            if fail:
                fail(str(exc))
            raise
    return out


def parse_models(value, fail=None) -> list[str]:
    items = value.split(",") if isinstance(value, str) else list(value)
    out = [str(i).strip() for i in items]
    for m in out:
        if m not in FAMILIES:
            msg = f"unknown model family {m!r}"
            if fail:
                fail(msg)
            raise ValueError(msg)
    return out


# -- matrix cells ---------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    config: str
    model: str
    smote: bool

    @property
    def id(self) -> str:
        return f"{self.config}/{self.model}/{'smote' if self.smote else 'nosmote'}"

    @property
    def slug(self) -> str:
        return self.id.replace("/", "__")


def cell_seeds(master: int, cell: Cell) -> tuple[int, int, int]:
    """(smote, search, model) seeds depending only on the master seed and the cell id."""
    ss = np.random.SeedSequence([master, zlib.crc32(cell.id.encode())])
    return tuple(int(s.generate_state(1)[0]) for s in ss.spawn(3))


def matrix_cells(cfg: ExperimentConfig) -> list[Cell]:
    return [Cell(c, m, s) for c in cfg.configs for m in cfg.models for s in cfg.smote_modes]


@dataclass
class CellResult:
    cell: Cell
    cm: ConfusionMatrix | None = None
    best_params: dict = field(default_factory=dict)
    n_train: int = 0
    n_train_pos: int = 0
    n_features: int = 0
    n_components: int = 0
    train_seconds: float = 0.0
    error: str | None = None
    model_state: dict | None = None
    pca: PcaState | None = None
    model_seed: int = 0

    @property
    def ok(self) -> bool:
        return self.error is None


def _prepare_fn(cfg: ExperimentConfig, use_smote: bool, columns):
    def prepare(X_tr, y_tr, X_other, seed):
        pca = None
        if use_smote:
            m = smote(FeatureMatrix(columns, X_tr, y_tr, np.zeros(len(y_tr), dtype=np.int64), "train"),
                      SmoteParams(cfg.smote.k_neighbors, cfg.smote.target_ratio, seed))
            X_tr, y_tr = m.X, m.y
        if cfg.pca:
            pca = fit_pca(X_tr, cfg.pca_retain)
            X_tr, X_other = transform(X_tr, pca), transform(X_other, pca)
        prepare.last_pca = pca
        return X_tr, y_tr, X_other
    prepare.last_pca = None
    return prepare


def run_cell(cell: Cell, cfg: ExperimentConfig, train: FeatureMatrix, test: FeatureMatrix) -> CellResult:
    res = CellResult(cell)
    try:
        tr = select_config(train, cell.config)
        te = select_config(test, cell.config)
        smote_seed, search_seed, model_seed = cell_seeds(cfg.seed, cell)
        res.model_seed = model_seed
        res.n_features = tr.X.shape[1]
        prepare = _prepare_fn(cfg, cell.smote, tr.columns)
        t0 = time.perf_counter()
        search = grid_search(cell.model, cfg.grids.get(cell.model), tr.X, tr.y, cfg.folds,
                             search_seed, prepare)
        X_tr, y_tr, X_te = prepare(tr.X, tr.y, te.X, smote_seed)
        model = make_model(cell.model, search.best, model_seed).fit(X_tr, y_tr)
        res.train_seconds = time.perf_counter() - t0
        res.cm = confusion_matrix(te.y, model.predict(X_te))
        res.best_params = search.best
        res.n_train, res.n_train_pos = len(y_tr), int(np.sum(y_tr == 1))
        res.pca = prepare.last_pca
        res.n_components = res.pca.n_components if res.pca is not None else X_tr.shape[1]
        res.model_state = model.get_state()
    except Exception as exc:  # recorded per cell; the matrix keeps going
        res.error = f"{type(exc).__name__}: {exc}"
        log.warning("cell %s failed: %s", cell.id, res.error)
        log.debug("%s", traceback.format_exc())
    return res


# worker-process globals, set once per worker by the pool initializer
_W: dict = {}


def _init_worker(cfg, train, test):
    threadpool_limits(1)
    _W.update(cfg=cfg, train=train, test=test)


def _run_in_worker(cell: Cell) -> CellResult:
    return run_cell(cell, _W["cfg"], _W["train"], _W["test"])


@dataclass
class PreparedData:
    table: FrameTable
    split: Split
    encoder: FeatureEncoder
    train: FeatureMatrix
    test: FeatureMatrix


def prepare_data(table: FrameTable, cfg: ExperimentConfig) -> PreparedData:
    if table.labels is None:
        raise ValueError("dataset has no labels")
    sp = split(table.labels, cfg.split, table.seconds)
    enc = FeatureEncoder(tuple(cfg.drop_list)).fit(table, sp.train)
    return PreparedData(table, sp, enc, enc.transform(table, sp.train, "train"),
                        enc.transform(table, sp.test, "test"))


def run_experiment(data: PreparedData, cfg: ExperimentConfig, jobs: int = 1,
                   progress=None) -> list[CellResult]:
    """Run every matrix cell and return results in matrix order.

    Cells are independent and seeded from ``(cfg.seed, cell.id)``, so the
    results do not depend on ``jobs``. BLAS is held to one thread in every
    worker to keep floating-point reduction order fixed.
    """
    cells = matrix_cells(cfg)
    results: list[CellResult] = []
    if jobs <= 1:
        with threadpool_limits(1):
            for cell in cells:
                r = run_cell(cell, cfg, data.train, data.test)
                results.append(r)
                if progress:
                    progress(r)
        return results
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(cfg, data.train, data.test)) as pool:
        for r in pool.map(_run_in_worker, cells):
            results.append(r)
            if progress:
                progress(r)
    return results

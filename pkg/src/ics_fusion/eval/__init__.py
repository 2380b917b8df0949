"""Splitting, metrics, grid search and the experiment matrix."""

from .experiment import (
    ALL_CONFIGS, ALL_MODELS, DEFAULT_GRIDS, Cell, CellResult, ExperimentConfig, PreparedData,
    cell_seeds, matrix_cells, prepare_data, run_cell, run_experiment,
)
from .metrics import (
    ConfusionMatrix, attack_precision, benign_precision, benign_recall, confusion_matrix,
    metric_flags, recall, summarize, weighted_precision,
)
from .search import CandidateScore, SearchResult, expand_grid, grid_search, select_best
from .split import CHRONOLOGICAL, STRATIFIED, Split, SplitSpec, split, stratified_folds

__all__ = [
    "ALL_CONFIGS", "ALL_MODELS", "CHRONOLOGICAL", "DEFAULT_GRIDS", "STRATIFIED", "CandidateScore",
    "Cell", "CellResult", "ConfusionMatrix", "ExperimentConfig", "PreparedData", "SearchResult",
    "Split", "SplitSpec", "attack_precision", "benign_precision", "benign_recall", "cell_seeds",
    "confusion_matrix", "expand_grid", "grid_search", "matrix_cells", "metric_flags",
    "prepare_data", "recall", "run_cell", "run_experiment", "select_best", "split",
    "stratified_folds", "summarize", "weighted_precision",
]

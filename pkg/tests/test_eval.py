from fractions import Fraction

import numpy as np
import pytest

from ics_fusion.errors import ConfigError, FoldTooSmall, TooFewRows
from ics_fusion.eval import (
    CHRONOLOGICAL, Cell, ConfusionMatrix, ExperimentConfig, SplitSpec, cell_seeds, confusion_matrix,
    grid_search, matrix_cells, metric_flags, prepare_data, recall, run_experiment, split,
    stratified_folds, weighted_precision,
)
from ics_fusion.eval.report import (
    N_BINS, bin_index, read_histogram_csv, read_report_csv, recall_histograms, report_rows,
    section_of, write_histogram_csv, write_report_csv,
)
from ics_fusion.eval.search import CandidateScore, select_best

from oracles import wp_oracle


# -- metrics ------------------------------------------------------------------------

def test_recall_examples():
    assert recall(ConfusionMatrix(tp=8, fn=2)) == 0.8
    assert recall(ConfusionMatrix(tp=3, fn=0, tn=4)) == 1.0
    cm = ConfusionMatrix(tn=10)
    assert recall(cm) == 0 and "no_positives" in metric_flags(cm)


def test_weighted_precision_examples():
    assert weighted_precision(ConfusionMatrix(5, 5, 85, 5)) == pytest.approx(0.9, abs=1e-4)
    assert weighted_precision(ConfusionMatrix(7, 0, 93, 0)) == 1.0
    assert weighted_precision(ConfusionMatrix(0, 0, 50, 0)) == 1.0


def test_undefined_precision_flag():
    cm = ConfusionMatrix(tp=0, fp=0, tn=90, fn=10)
    assert "undefined_precision_attack" in metric_flags(cm)
    assert weighted_precision(cm) == pytest.approx(0.9 * 0.9)


def test_confusion_matrix_counts():
    cm = confusion_matrix([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (2, 1, 1, 1)
    assert cm.total == 5


# -- split --------------------------------------------------------------------------

def test_stratified_split_arithmetic():
    y = np.r_[np.zeros(90, int), np.ones(10, int)]
    s = split(y, SplitSpec(0.8, seed=1))
    assert (len(s.train), int(y[s.train].sum())) == (80, 8)
    assert (len(s.test), int(y[s.test].sum())) == (20, 2)
    assert np.intersect1d(s.train, s.test).size == 0
    again = split(y, SplitSpec(0.8, seed=1))
    np.testing.assert_array_equal(s.train, again.train)


def test_chronological_split():
    s = split(np.r_[np.zeros(50, int), np.ones(50, int)], SplitSpec(0.8, CHRONOLOGICAL),
              seconds=np.arange(100))
    assert list(s.train) == list(range(80))


def test_split_errors():
    with pytest.raises(TooFewRows):
        split(np.r_[np.zeros(20, int), np.ones(4, int)])
    with pytest.raises(FoldTooSmall):
        stratified_folds(np.r_[np.zeros(20, int), np.ones(2, int)], 3, np.random.default_rng(0))


def test_folds_partition_rows():
    y = np.r_[np.zeros(37, int), np.ones(11, int)]
    folds = stratified_folds(y, 3, np.random.default_rng(0))
    assert sorted(np.concatenate(folds).tolist()) == list(range(48))
    pos = [int(y[f].sum()) for f in folds]
    assert max(pos) - min(pos) <= 1


# -- grid search --------------------------------------------------------------------

def test_select_best_tie_breaks():
    a = CandidateScore({"k": 1}, [0.8, 0.8], [0.7, 0.7])
    b = CandidateScore({"k": 3}, [0.8, 0.8], [0.9, 0.9])
    c = CandidateScore({"k": 5}, [0.8, 0.8], [0.9, 0.9])
    assert select_best([a, b, c]) == 1
    d = CandidateScore({"k": 7}, [0.9, 0.9], [0.1, 0.1])
    assert select_best([a, b, d]) == 2


def _separable(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (X[:, 0] > 0.8).astype(int)
    return X, y


def test_grid_search_single_candidate():
    X, y = _separable()
    r = grid_search("knn", {"k": [3]}, X, y)
    assert r.best == {"k": 3} and r.folds == []


def test_grid_search_dominator_wins_and_no_leakage():
    X, y = _separable()
    r = grid_search("tree", {"max_depth": [0, 4]}, X, y, k=3, seed=2)
    assert r.best == {"max_depth": 4}
    assert all(s0 < s1 for s0, s1 in zip(r.scores[0].recalls, r.scores[1].recalls))
    for f, val in enumerate(r.folds):
        np.testing.assert_array_equal(r.evaluated[f], val)
        others = np.concatenate([r.folds[g] for g in range(3) if g != f])
        assert np.intersect1d(others, val).size == 0


def test_grid_search_deterministic():
    X, y = _separable()
    a = grid_search("knn", {"k": [1, 3, 5]}, X, y, seed=4)
    b = grid_search("knn", {"k": [1, 3, 5]}, X, y, seed=4)
    assert [s.recalls for s in a.scores] == [s.recalls for s in b.scores]


# -- experiment config ----------------------------------------------------------------

def test_config_errors_name_key():
    with pytest.raises(ConfigError, match="split.ratio"):
        ExperimentConfig.from_dict({"split": {"ratio": 1.5}})
    with pytest.raises(ConfigError, match="grids.knn"):
        ExperimentConfig.from_dict({"grids": {"knn": {"neighbours": [3]}}})
    with pytest.raises(ConfigError, match="configs"):
        ExperimentConfig.from_dict({"configs": ["everything"]})
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_dict({"bogus": 1})


def test_matrix_size_and_seeds():
    cfg = ExperimentConfig()
    cells = matrix_cells(cfg)
    assert len(cells) == 72
    assert len({c.id for c in cells}) == 72
    c = Cell("conn_only", "knn", True)
    assert cell_seeds(0, c) == cell_seeds(0, c)
    assert cell_seeds(0, c) != cell_seeds(1, c)
    assert cell_seeds(0, c) != cell_seeds(0, Cell("conn_only", "knn", False))


# -- report -------------------------------------------------------------------------

def test_bins():
    assert bin_index(0.0) == 0
    assert bin_index(0.05) == 1
    assert bin_index(0.8) == 16
    assert bin_index(1.0) == N_BINS - 1


def test_sections():
    assert section_of("proc_only", False) == "baseline"
    assert section_of("proc_only", True) == "single_smote"
    assert section_of("conn_cip_proc", False) == "combined"
    assert section_of("conn_cip", True) == "combined_smote"


@pytest.fixture(scope="module")
def small_experiment(small_scenario_dir, tmp_path_factory):
    from ics_fusion.pipeline import build_from_raw

    table = build_from_raw(small_scenario_dir).table
    cfg = ExperimentConfig.from_dict({
        "seed": 3,
        "grids": {"nn": {"hidden": [[16]], "epochs": [5]}, "fcm_ensemble": {"n_clusters": [3], "epochs": [5]},
                  "forest": {"n_trees": [5]}},
        "folds": 2,
    })
    data = prepare_data(table, cfg)
    results = run_experiment(data, cfg)
    out = tmp_path_factory.mktemp("small_exp")
    rows = report_rows(results)
    write_report_csv(rows, out / "report.csv")
    return data, cfg, results, out


def test_small_experiment_complete(small_experiment):
    data, cfg, results, out = small_experiment
    assert len(results) == 72
    assert all(r.ok for r in results), [r.error for r in results if not r.ok]
    for r in results:
        assert r.cm.total == len(data.test)


def test_report_recompute_oracle(small_experiment):
    *_, out = small_experiment
    for row in read_report_csv(out / "report.csv"):
        tp, fp, tn, fn = (int(row[k]) for k in ("tp", "fp", "tn", "fn"))
        assert float(row["recall"]) == float(Fraction(tp, tp + fn) if tp + fn else Fraction(0))
        assert float(row["weighted_precision"]) == float(wp_oracle(tp, fp, tn, fn))


def test_histogram_conservation(small_experiment, tmp_path):
    *_, out = small_experiment
    rows = read_report_csv(out / "report.csv")
    hist = recall_histograms(rows)
    assert sum(hist["baseline"]) == 3 * 6
    assert sum(hist["combined"]) == 3 * 6
    assert sum(sum(v) for v in hist.values()) == 72
    assert all(r["smote"] == "off" for r in rows if section_of(r["config"], r["smote"] == "on") == "baseline")
    write_histogram_csv(hist, tmp_path / "h.csv")
    assert read_histogram_csv(tmp_path / "h.csv") == hist


def test_smote_cells_balanced(small_experiment):
    _, cfg, results, _ = small_experiment
    for r in results:
        if r.cell.smote:
            n_neg = r.n_train - r.n_train_pos
            assert abs(r.n_train_pos - cfg.smote.target_ratio * n_neg) <= 1

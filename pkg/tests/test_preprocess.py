import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ics_fusion.balance import SYNTHETIC_SECOND, SmoteParams, nearest_neighbors, smote, synthesize
from ics_fusion.errors import (
    DegenerateInput, DimensionMismatch, EmptySelection, NotTrainingSplit, TooFewMinority,
)
from ics_fusion.features import (
    Column, FeatureEncoder, FeatureMatrix, apply_minmax, canonical_config, drop_identifiers, fit_minmax,
    one_hot, select_config,
)
from ics_fusion.fusion import FeatureMeta, FrameTable
from ics_fusion.reduce import PcaState, fit_pca, inverse_transform, transform

from oracles import jacobi_eig


# -- features ---------------------------------------------------------------------

def test_one_hot_and_unseen_symbol():
    vocab = ["S0", "SF"]
    out = one_hot(["SF", "S0", "REJ"], vocab)
    assert out.tolist() == [[0, 1], [1, 0], [0, 0]]


def test_minmax_rules():
    state = fit_minmax(np.array([[0.0, 5.0], [10.0, 5.0]]))
    out = apply_minmax(np.array([[5.0, 5.0], [20.0, 7.0], [-1.0, 0.0]]), state)
    assert out.tolist() == [[0.5, 0.0], [1.0, 0.0], [0.0, 0.0]]


def _table(n=20):
    secs = np.arange(n)
    cols = {
        "conn.count": secs.astype(float),
        "conn.orig_addr_mode": np.array(["10.0.0.%d" % (i % 3) for i in secs], dtype=object),
        "conn.proto": np.array(["tcp" if i % 2 else "udp" for i in secs], dtype=object),
        "cip.count": (secs * 2).astype(float),
        "proc.LIT101": np.linspace(100, 900, n),
        "proc.P101": np.array([str(i % 3) for i in secs], dtype=object),
    }
    meta = {
        "conn.count": FeatureMeta("conn", "numeric"),
        "conn.orig_addr_mode": FeatureMeta("conn", "categorical", "none"),
        "conn.proto": FeatureMeta("conn", "categorical", "none"),
        "cip.count": FeatureMeta("cip", "numeric"),
        "proc.LIT101": FeatureMeta("proc", "numeric"),
        "proc.P101": FeatureMeta("proc", "categorical"),
    }
    return FrameTable(0, n, cols, meta, {}, (secs >= 15).astype(np.int64))


def test_identifiers_dropped():
    t = drop_identifiers(_table())
    assert "conn.orig_addr_mode" not in t.columns
    enc = FeatureEncoder().fit(_table(), np.arange(10))
    assert enc.dropped == ["conn.orig_addr_mode"]
    assert not any("addr" in c.name for c in enc.columns)


def test_encoder_fits_on_train_rows_only():
    t = _table()
    train = np.arange(10)
    enc = FeatureEncoder().fit(t, train)
    m = enc.transform(t, np.arange(10, 20), role="test")
    j = m.names.index("conn.count")
    # bounds come from rows 0..9, so later rows clip to 1
    assert enc.normalizer.mins[j] == 0 and enc.normalizer.maxs[j] == 9
    assert (m.X[:, j] == 1.0).all()
    assert m.X.min() >= 0 and m.X.max() <= 1


def test_encoder_vocabulary_from_train_rows():
    t = _table()
    t.columns["conn.proto"][15:] = "icmp"
    enc = FeatureEncoder().fit(t, np.arange(10))
    assert enc.vocabularies["conn.proto"] == ["tcp", "udp"]
    m = enc.transform(t)
    cols = [m.names.index("conn.proto=tcp"), m.names.index("conn.proto=udp")]
    assert (m.X[15:][:, cols] == 0).all()


def test_encoder_round_trip():
    t = _table()
    enc = FeatureEncoder().fit(t, np.arange(12))
    back = FeatureEncoder.from_dict(json.loads(json.dumps(enc.to_dict())))
    np.testing.assert_array_equal(enc.transform(t).X, back.transform(t).X)


def test_select_config_and_aliases():
    m = FeatureEncoder().fit(_table(), np.arange(20)).transform(_table())
    proc = select_config(m, "proc_only")
    assert {c.source for c in proc.columns} == {"proc"}
    net = select_config(m, "network_only")
    assert {c.source for c in net.columns} == {"conn", "cip"}
    assert canonical_config("combined_all") == "conn_cip_proc"
    with pytest.raises(ValueError):
        canonical_config("everything")
    only_conn = FeatureMatrix([Column("conn.count", "conn", "numeric")], m.X[:, :1], m.y, m.seconds)
    with pytest.raises(EmptySelection):
        select_config(only_conn, "cip_only")


# -- SMOTE ------------------------------------------------------------------------

def _imbalanced(n_pos=10, n_neg=100, d=4, seed=0, role="train"):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_neg, d)), rng.normal(3, 1, (n_pos, d))])
    y = np.r_[np.zeros(n_neg, int), np.ones(n_pos, int)]
    cols = [Column(f"f{i}", "conn", "numeric") for i in range(d)]
    return FeatureMatrix(cols, X, y, np.arange(len(y)), role)


def test_smote_count_and_order():
    m = _imbalanced()
    out = smote(m, SmoteParams(seed=1))
    assert len(out) == 200
    assert (out.y[110:] == 1).all()
    assert (out.seconds[110:] == SYNTHETIC_SECOND).all()
    np.testing.assert_array_equal(out.X[:110], m.X)


def test_smote_points_lie_between_parent_and_neighbor():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(10, 5))
    samples, parents, neighbors = synthesize(X, 90, 5, np.random.default_rng(4))
    nn = nearest_neighbors(X, 5)
    for s, p, q in zip(samples, parents, neighbors):
        assert q in nn[p]
        d = X[q] - X[p]
        lam = float(np.dot(s - X[p], d) / np.dot(d, d))
        assert -1e-12 <= lam <= 1 + 1e-12
        np.testing.assert_allclose(s, X[p] + lam * d, atol=1e-12)


def test_nearest_neighbors_oracle():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    nn = nearest_neighbors(X, 4)
    for i in range(60):
        d = [(math.dist(X[i], X[j]), j) for j in range(60) if j != i]
        assert list(nn[i]) == [j for _, j in sorted(d)[:4]]


def test_smote_deterministic():
    a = smote(_imbalanced(), SmoteParams(seed=9))
    b = smote(_imbalanced(), SmoteParams(seed=9))
    np.testing.assert_array_equal(a.X, b.X)
    c = smote(_imbalanced(), SmoteParams(seed=10))
    assert not np.array_equal(a.X, c.X)


def test_smote_refuses_test_rows_and_tiny_minority():
    with pytest.raises(NotTrainingSplit):
        smote(_imbalanced(role="test"))
    with pytest.raises(TooFewMinority):
        smote(_imbalanced(n_pos=1))


def test_smote_target_ratio():
    out = smote(_imbalanced(), SmoteParams(target_ratio=0.5, seed=0))
    assert int(out.y.sum()) == 50


# -- PCA --------------------------------------------------------------------------

def test_pca_matches_jacobi_oracle():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 3)) @ np.array([[3.0, 0.5, 0.1], [0.0, 1.0, 0.4], [0.0, 0.0, 0.3]])
    state = fit_pca(X, 3)
    cov = np.cov(X, rowvar=False)
    evals, V = jacobi_eig(cov)
    order = np.argsort(evals)[::-1]
    np.testing.assert_allclose(state.explained_variance, evals[order], rtol=1e-9)
    for k, j in enumerate(order):
        v = V[:, j]
        v = v * np.sign(v[np.argmax(np.abs(v))])
        np.testing.assert_allclose(state.components[k], v, atol=1e-8)


def test_pca_variance_sum_and_reconstruction():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 6))
    full = fit_pca(X, 6)
    assert full.explained_variance.sum() == pytest.approx(full.total_variance)
    np.testing.assert_allclose(inverse_transform(transform(X, full), full), X, atol=1e-10)
    np.testing.assert_allclose(transform(X, full).mean(axis=0), 0, atol=1e-12)


def test_pca_retains_fraction():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 5)) * np.array([10, 5, 1, 0.5, 0.1])
    s = fit_pca(X, 0.95)
    cum = np.cumsum(fit_pca(X, 5).explained_variance_ratio)
    assert cum[s.n_components - 1] >= 0.95
    assert s.n_components == 1 or cum[s.n_components - 2] < 0.95


def test_pca_diagonal_covariance_gives_axes():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(5000, 3)) * np.array([1.0, 3.0, 2.0])
    s = fit_pca(X, 3)
    assert [int(np.argmax(np.abs(c))) for c in s.components] == [1, 2, 0]


def test_pca_collinear_example():
    x = np.arange(10, dtype=float)
    s = fit_pca(np.c_[x, 2 * x], 0.95)
    assert s.n_components == 1
    np.testing.assert_allclose(s.components[0], np.array([1, 2]) / math.sqrt(5), atol=1e-12)
    assert s.explained_variance_ratio[0] == pytest.approx(1.0)


def test_pca_errors_and_round_trip():
    with pytest.raises(DegenerateInput):
        fit_pca(np.ones((5, 3)))
    rng = np.random.default_rng(4)
    s = fit_pca(rng.normal(size=(20, 4)))
    with pytest.raises(DimensionMismatch):
        transform(np.zeros((2, 3)), s)
    back = PcaState.from_dict(json.loads(json.dumps(s.to_dict())))
    X = rng.normal(size=(5, 4))
    np.testing.assert_array_equal(transform(X, back), transform(X, s))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_pca_components_orthonormal(seed, d):
    X = np.random.default_rng(seed).normal(size=(30, d))
    s = fit_pca(X, d)
    np.testing.assert_allclose(s.components @ s.components.T, np.eye(d), atol=1e-10)

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ics_fusion.errors import EmptySeries, NoOverlap, OverlapError
from ics_fusion.fusion import (
    NO_TRAFFIC, AttackWindow, FeatureMeta, FrameTable, aggregate_categorical, aggregate_numeric, align,
    cip_frames, conn_frames, derive_window_stats, fill_categorical, fill_gaps, fuse, interpolate,
    label_frames, label_seconds, process_frames, read_attack_windows, read_fused, write_attack_windows, write_fused,
)
from ics_fusion.ingest import CipRecord, ConnRecord, ProcessSample, SENSOR

T0 = 1647312000


def _conn(ts, **kw):
    base = dict(uid="C", orig_addr="10.0.0.1", orig_port=5000, resp_addr="10.0.0.2", resp_port=44818,
                proto="tcp", service="enip", duration=0.1, orig_bytes=10, resp_bytes=20, conn_state="SF",
                orig_pkts=1, resp_pkts=1)
    base.update(kw)
    return ConnRecord(ts=ts, **base)


# -- aggregation -------------------------------------------------------------------

def test_mean_per_second():
    ts = [T0 + 0.1, T0 + 0.9, T0 + 2.5]
    out = aggregate_numeric(ts, [1.0, 3.0, 7.0], (T0, T0 + 3))
    assert out[0] == 2.0 and math.isnan(out[1]) and out[2] == 7.0


def test_mean_ignores_unset():
    out = aggregate_numeric([T0, T0 + 0.5], [None, 4.0], (T0, T0 + 1))
    assert out[0] == 4.0


def test_mode_lexicographic_tie_break():
    ts = [T0 + 0.1, T0 + 0.2, T0 + 0.3, T0 + 0.4]
    out = aggregate_categorical(ts, ["tcp", "udp", "udp", "tcp"], (T0, T0 + 1))
    assert out[0] == "tcp"
    out = aggregate_categorical(ts, ["S0", "SF", "SF", "REJ"], (T0, T0 + 1))
    assert out[0] == "SF"


def test_floor_assigns_second():
    out = aggregate_numeric([T0 + 0.999999, T0 + 1.0], [1.0, 2.0], (T0, T0 + 2))
    assert list(out) == [1.0, 2.0]


def _spike_oracle(ts, values, axis, theta, W):
    """Loop-based recomputation straight from the rule."""
    t0, t1 = axis
    n = t1 - t0
    buckets = [[] for _ in range(n)]
    for t, v in zip(ts, values):
        s = int(math.floor(t)) - t0
        if 0 <= s < n and v is not None:
            buckets[s].append(v)
    means = [sum(b) / len(b) if b else None for b in buckets]
    std = []
    for b, m in zip(buckets, means):
        std.append(math.sqrt(sum((x - m) ** 2 for x in b) / len(b)) if b else None)
    spike = [0] * n
    for t in range(W, n):
        prior = [m for m in means[t - W:t] if m is not None]
        if not prior or means[t] is None or means[t - 1] is None:
            continue
        mu = sum(prior) / len(prior)
        sd = math.sqrt(sum((p - mu) ** 2 for p in prior) / len(prior))
        spike[t] = int(abs(means[t] - means[t - 1]) > theta * sd)
    return std, spike


@pytest.mark.parametrize("seed", range(5))
def test_spike_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 400
    secs = rng.integers(0, n, size=1500)
    ts = T0 + secs + rng.random(1500)
    vals = rng.normal(10, 1, size=1500)
    vals[secs == 200] += 30  # one obvious jump
    axis = (T0, T0 + n)
    std, spike = derive_window_stats(ts, vals, axis, 3.0, 60)
    o_std, o_spike = _spike_oracle(ts.tolist(), vals.tolist(), axis, 3.0, 60)
    assert list(spike) == o_spike
    for a, b in zip(std, o_std):
        assert (b is None and math.isnan(a)) or a == pytest.approx(b, abs=1e-9)
    assert spike[200] == 1


def test_first_window_never_spikes():
    n = 120
    vals = np.where(np.arange(n) == 30, 1000.0, 1.0) + np.arange(n) * 0.01
    _, spike = derive_window_stats(T0 + np.arange(n), vals, (T0, T0 + n), 3.0, 60)
    assert spike[:60].sum() == 0


# -- gap filling -------------------------------------------------------------------

def test_interpolation_linear_interior_nearest_edges():
    out = interpolate([np.nan, 1.0, np.nan, np.nan, 4.0, np.nan])
    assert list(out) == [1.0, 1.0, 2.0, 3.0, 4.0, 4.0]


def test_interpolation_all_missing():
    with pytest.raises(EmptySeries):
        interpolate([np.nan, np.nan])


def test_categorical_fill():
    assert list(fill_categorical([None, "a", None], NO_TRAFFIC)) == ["none", "a", "none"]
    assert list(fill_categorical([None, "0", None, "1"])) == ["0", "0", "0", "1"]


# -- alignment and labels ------------------------------------------------------------

def _table(start, end, name, source="conn"):
    return FrameTable(start, end, {name: np.arange(end - start, dtype=float)},
                      {name: FeatureMeta(source, "numeric")})


def test_align_intersects_spans():
    t = align(_table(0, 10, "conn.a"), _table(3, 20, "cip.b", "cip"))
    assert (t.start, t.end) == (3, 10)
    assert list(t.columns["conn.a"]) == list(range(3, 10))
    assert list(t.columns["cip.b"]) == list(range(0, 7))


def test_align_no_overlap():
    with pytest.raises(NoOverlap):
        align(_table(0, 10, "conn.a"), _table(10, 20, "cip.b", "cip"))


def test_labels_inclusive_both_ends():
    w = AttackWindow("A", 100, 102)
    lab = label_seconds(np.arange(98, 105), [w])
    assert list(lab) == [0, 0, 1, 1, 1, 0, 0]
    assert w.length == 3


def test_overlapping_windows_rejected():
    with pytest.raises(OverlapError):
        label_seconds([1, 2], [AttackWindow("A", 0, 5), AttackWindow("B", 5, 9)])
    # touching but disjoint is fine
    label_seconds([1, 2], [AttackWindow("A", 0, 4), AttackWindow("B", 5, 9)])


def test_attack_schedule_round_trip():
    ws = [AttackWindow("A1", 10, 20, "process", "spoof LIT101"), AttackWindow("A2", 30, 31)]
    buf = io.StringIO()
    write_attack_windows(ws, buf)
    assert read_attack_windows(io.StringIO(buf.getvalue())) == ws


# -- frame builders ----------------------------------------------------------------

def _records(rng, n, span):
    return [
        _conn(T0 + float(rng.random() * span), orig_bytes=int(rng.integers(0, 500)),
              proto=str(rng.choice(["tcp", "udp"])), conn_state=str(rng.choice(["SF", "S0", "REJ"])))
        for _ in range(n)
    ]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    recs = _records(rng, 200, 50)
    a = conn_frames(recs, (T0, T0 + 50))
    perm = [recs[i] for i in rng.permutation(len(recs))]
    b = conn_frames(perm, (T0, T0 + 50))
    for name in a.columns:
        x, y = a.columns[name], b.columns[name]
        if x.dtype == object:
            assert list(x) == list(y), name
        else:
            np.testing.assert_array_equal(x, y, err_msg=name)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_count_conservation(seed):
    rng = np.random.default_rng(seed)
    recs = _records(rng, 300, 40)
    t = conn_frames(recs)
    assert t.columns["conn.count"].sum() == len(recs)
    cips = [CipRecord(r.ts, r.uid, r.orig_addr, r.resp_addr, str(rng.choice(["read-tag", "write-tag"])),
                      "success", 24, 96) for r in recs]
    c = cip_frames(cips)
    assert c.columns["cip.count"].sum() == len(cips)
    assert c.columns["cip.cmd.read-tag"].sum() + c.columns["cip.cmd.write-tag"].sum() == len(cips)


def test_fuse_end_to_end_and_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    conn = _records(rng, 400, 100)
    cip = [CipRecord(T0 + i + 0.5, "C", "10.0.0.1", "10.0.0.2", "read-tag", "success", 24, 96)
           for i in range(100)]
    samples = [ProcessSample(T0 + i, "LIT101", SENSOR, 500.0 + i) for i in range(0, 100, 2)]
    table = fuse(conn, cip, samples, [AttackWindow("A", T0 + 10, T0 + 19)])
    assert len(table) == 99  # process span ends at the last sample's second
    assert table.labels.sum() == 10
    # interpolated sensor between even-second samples
    i = 11 - (table.start - T0)
    assert table.columns["proc.LIT101"][i] == pytest.approx(511.0)
    write_fused(table, tmp_path / "f.csv", tmp_path / "f.json")
    back = read_fused(tmp_path / "f.csv", tmp_path / "f.json")
    assert (back.start, back.end) == (table.start, table.end)
    np.testing.assert_array_equal(back.labels, table.labels)
    for n in table.columns:
        if table.meta[n].kind == "numeric":
            np.testing.assert_array_equal(back.columns[n], table.columns[n])
        else:
            assert list(back.columns[n]) == list(table.columns[n])


def test_every_fused_value_present():
    rng = np.random.default_rng(1)
    conn = _records(rng, 30, 60)  # many empty seconds
    cip = [CipRecord(T0 + i, "C", "a", "b", "read-tag", None, 1, 2) for i in range(60)]
    samples = [ProcessSample(T0 + i, "LIT101", SENSOR, float(i)) for i in range(60)]
    t = fill_gaps(align(conn_frames(conn), cip_frames(cip), process_frames(samples)))
    for n, col in t.columns.items():
        if col.dtype == object:
            assert all(v is not None for v in col), n
        else:
            assert not np.isnan(col).any(), n
    assert "none" in set(t.columns["conn.proto"])


def test_label_frames_sets_labels():
    t = label_frames(_table(0, 5, "conn.a"), [AttackWindow("A", 4, 4)])
    assert list(t.labels) == [0, 0, 0, 0, 1]

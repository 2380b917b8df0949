"""One-second aggregation, alignment, gap filling and labelling of the streams.

Frames are held column-wise in a :class:`FrameTable`: one array per
feature over a contiguous range of integer epoch seconds. Numeric gaps are
NaN, categorical gaps are ``None`` until :func:`fill_gaps` runs.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptySeries, NoOverlap, OverlapError
from .ingest import ACTUATOR, CipRecord, ConnRecord, ProcessSample

NUMERIC, CATEGORICAL = "numeric", "categorical"
SOURCES = ("conn", "cip", "proc")
PURDUE_LEVEL = {"conn": ConnRecord.purdue_level, "cip": CipRecord.purdue_level,
                "proc": ProcessSample.purdue_level}

BENIGN, MALICIOUS = 0, 1
ATTACK_CATEGORIES = ("network", "process", "cross-layer")

SPIKE_THRESHOLD = 3.0
SPIKE_WINDOW = 60
NO_TRAFFIC = "none"


# -- per-second aggregation ---------------------------------------------------

def _axis_index(ts, axis):
    t0, t1 = axis
    if t1 <= t0:
        raise ValueError(f"empty axis [{t0}, {t1})")
    sec = np.floor(np.asarray(ts, dtype=float)).astype(np.int64)
    inside = (sec >= t0) & (sec < t1)
    return sec - t0, inside, t1 - t0


def _as_float(values) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype != object:
        return values.astype(float)
    return np.array([np.nan if v is None else v for v in values], dtype=float)


def count_per_second(ts, axis) -> np.ndarray:
    idx, inside, n = _axis_index(ts, axis)
    return np.bincount(idx[inside], minlength=n).astype(np.int64)


def aggregate_numeric(ts, values, axis) -> np.ndarray:
    """Mean of the values falling in each second of ``axis = (t0, t1)``.

    ``None``/NaN values are ignored; seconds without values are NaN.
    """
    vals = _as_float(values)
    idx, inside, n = _axis_index(ts, axis)
    keep = inside & ~np.isnan(vals)
    idx, vals = idx[keep], vals[keep]
    # canonical summation order so record order never changes the result
    order = np.lexsort((vals, idx))
    idx, vals = idx[order], vals[order]
    sums = np.bincount(idx, weights=vals, minlength=n)
    counts = np.bincount(idx, minlength=n)
    out = np.full(n, np.nan)
    has = counts > 0
    out[has] = sums[has] / counts[has]
    return out


def _mode(counter: Counter):
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def aggregate_categorical(ts, symbols, axis) -> np.ndarray:
    """Most frequent symbol per second; ties go to the lexicographically smallest."""
    idx, inside, n = _axis_index(ts, axis)
    buckets: dict[int, Counter] = defaultdict(Counter)
    for i, ok, sym in zip(idx.tolist(), inside.tolist(), symbols):
        if ok and sym is not None:
            buckets[i][sym] += 1
    out = np.full(n, None, dtype=object)
    for i, counter in buckets.items():
        out[i] = _mode(counter)
    return out


def aggregate_distinct(ts, symbols, axis) -> np.ndarray:
    idx, inside, n = _axis_index(ts, axis)
    buckets: dict[int, set] = defaultdict(set)
    for i, ok, sym in zip(idx.tolist(), inside.tolist(), symbols):
        if ok and sym is not None:
            buckets[i].add(sym)
    out = np.zeros(n, dtype=np.int64)
    for i, s in buckets.items():
        out[i] = len(s)
    return out


def derive_window_stats(ts, values, axis, threshold: float = SPIKE_THRESHOLD,
                        window: int = SPIKE_WINDOW) -> tuple[np.ndarray, np.ndarray]:
    """Within-second population std and a 0/1 spike flag per second.

    A second spikes when its mean moves from the previous second's mean by
    more than ``threshold`` times the std of the means over the preceding
    ``window`` seconds. The first ``window`` seconds never spike.
    """
    vals = _as_float(values)
    means = aggregate_numeric(ts, vals, axis)
    # two-pass variance: mean of squared deviations from the second's mean
    idx, inside, n = _axis_index(ts, axis)
    keep = inside & ~np.isnan(vals)
    dev = np.full_like(vals, np.nan)
    dev[keep] = (vals[keep] - means[idx[keep]]) ** 2
    std = np.sqrt(aggregate_numeric(ts, dev, axis))

    spike = np.zeros(n, dtype=np.int64)
    if n > window and window >= 1:
        prior = sliding_window_view(means, window)[: n - window]  # prior[j] covers j..j+W-1
        present = ~np.isnan(prior)
        cnt = present.sum(axis=1)
        filled = np.where(present, prior, 0.0)
        safe = np.maximum(cnt, 1)
        mu = filled.sum(axis=1) / safe
        var = np.where(present, (prior - mu[:, None]) ** 2, 0.0).sum(axis=1) / safe
        rolling_std = np.sqrt(var)
        cur = means[window:]
        prev = means[window - 1: n - 1]
        jump = np.abs(cur - prev)
        ok = (cnt > 0) & ~np.isnan(jump)
        spike[window:] = (ok & (jump > threshold * rolling_std)).astype(np.int64)
    return std, spike


# -- gap filling --------------------------------------------------------------

def interpolate(series) -> np.ndarray:
    """Linear interior fill between present neighbours, nearest-value fill at the edges."""
    y = np.asarray(series, dtype=float)
    present = ~np.isnan(y)
    if not present.any():
        raise EmptySeries("series has no values")
    if present.all():
        return y.copy()
    x = np.arange(len(y))
    return np.interp(x, x[present], y[present])


def fill_categorical(series, fill: str | None = None) -> np.ndarray:
    """Replace ``None`` by ``fill``, or by the nearest preceding (else following) symbol."""
    out = np.array(series, dtype=object)
    missing = np.array([v is None for v in out], dtype=bool)
    if fill is not None:
        out[missing] = fill
        return out
    if missing.all():
        raise EmptySeries("categorical series has no values")
    last = None
    for i in range(len(out)):
        if out[i] is None:
            out[i] = last
        else:
            last = out[i]
    first = next(v for v in out if v is not None)
    for i in range(len(out)):
        if out[i] is not None:
            break
        out[i] = first
    return out


# -- frame tables -------------------------------------------------------------

@dataclass(frozen=True)
class FeatureMeta:
    source: str
    kind: str
    fill: str | None = None  # categorical gap symbol; None means nearest-value fill

    @property
    def level(self) -> str:
        return PURDUE_LEVEL[self.source]


@dataclass
class FrameTable:
    """Features for every second in ``[start, end)``, keyed by namespaced names."""

    start: int
    end: int
    columns: dict[str, np.ndarray]
    meta: dict[str, FeatureMeta]
    coverage: dict[str, np.ndarray] = field(default_factory=dict)
    labels: np.ndarray | None = None

    def __len__(self):
        return self.end - self.start

    @property
    def seconds(self) -> np.ndarray:
        return np.arange(self.start, self.end, dtype=np.int64)

    @property
    def feature_names(self) -> list[str]:
        return list(self.columns)

    def slice(self, start: int, end: int) -> "FrameTable":
        a, b = start - self.start, end - self.start
        return FrameTable(
            start, end,
            {k: v[a:b] for k, v in self.columns.items()},
            dict(self.meta),
            {k: v[a:b] for k, v in self.coverage.items()},
            None if self.labels is None else self.labels[a:b],
        )

    def drop(self, names: Iterable[str]) -> "FrameTable":
        names = set(names)
        return FrameTable(
            self.start, self.end,
            {k: v for k, v in self.columns.items() if k not in names},
            {k: v for k, v in self.meta.items() if k not in names},
            dict(self.coverage), self.labels,
        )

    def frames(self) -> Iterator["Frame"]:
        names = self.feature_names
        for i, sec in enumerate(range(self.start, self.end)):
            yield Frame(
                second=sec,
                features={n: self.columns[n][i] for n in names},
                label="malicious" if self.labels is not None and self.labels[i] else "benign",
                coverage={s: int(c[i]) for s, c in self.coverage.items()},
            )


@dataclass(frozen=True)
class Frame:
    second: int
    features: dict
    label: str
    coverage: dict


def _span(ts: Sequence[float]) -> tuple[int, int]:
    if len(ts) == 0:
        raise EmptySeries("stream has no records")
    arr = np.asarray(ts, dtype=float)
    return int(math.floor(arr.min())), int(math.floor(arr.max())) + 1


def conn_frames(records: Sequence[ConnRecord], axis: tuple[int, int] | None = None) -> FrameTable:
    ts = np.array([r.ts for r in records], dtype=float)
    axis = axis or _span(ts)
    cols: dict[str, np.ndarray] = {}
    meta: dict[str, FeatureMeta] = {}

    def add(name, values, kind=NUMERIC, fill=None):
        cols[name] = values
        meta[name] = FeatureMeta("conn", kind, fill)

    counts = count_per_second(ts, axis)
    add("conn.count", counts.astype(float))
    add("conn.distinct_orig_hosts", aggregate_distinct(ts, [r.orig_addr for r in records], axis).astype(float))
    add("conn.distinct_resp_hosts", aggregate_distinct(ts, [r.resp_addr for r in records], axis).astype(float))
    add("conn.distinct_resp_ports", aggregate_distinct(ts, [r.resp_port for r in records], axis).astype(float))
    for attr in ("duration", "orig_bytes", "resp_bytes", "orig_pkts", "resp_pkts"):
        add(f"conn.{attr}", aggregate_numeric(ts, [getattr(r, attr) for r in records], axis))
    for attr in ("proto", "service", "conn_state"):
        add(f"conn.{attr}", aggregate_categorical(ts, [getattr(r, attr) for r in records], axis),
            CATEGORICAL, NO_TRAFFIC)
    for attr in ("orig_addr", "resp_addr", "resp_port"):
        add(f"conn.{attr}_mode",
            aggregate_categorical(ts, [str(getattr(r, attr)) for r in records], axis),
            CATEGORICAL, NO_TRAFFIC)
    return FrameTable(axis[0], axis[1], cols, meta, {"conn": counts})


def cip_frames(records: Sequence[CipRecord], axis: tuple[int, int] | None = None) -> FrameTable:
    ts = np.array([r.ts for r in records], dtype=float)
    axis = axis or _span(ts)
    cols: dict[str, np.ndarray] = {}
    meta: dict[str, FeatureMeta] = {}

    def add(name, values, kind=NUMERIC, fill=None):
        cols[name] = values
        meta[name] = FeatureMeta("cip", kind, fill)

    counts = count_per_second(ts, axis)
    add("cip.count", counts.astype(float))
    add("cip.distinct_resp_hosts", aggregate_distinct(ts, [r.resp_addr for r in records], axis).astype(float))
    add("cip.request_len", aggregate_numeric(ts, [r.request_len for r in records], axis))
    add("cip.response_len", aggregate_numeric(ts, [r.response_len for r in records], axis))
    commands = [r.command for r in records]
    statuses = [r.status for r in records]
    for cmd in sorted(set(commands)):
        sel = np.array([c == cmd for c in commands], dtype=bool)
        add(f"cip.cmd.{cmd}", count_per_second(ts[sel], axis).astype(float))
    for st in sorted({s for s in statuses if s is not None}):
        sel = np.array([s == st for s in statuses], dtype=bool)
        add(f"cip.status.{st}", count_per_second(ts[sel], axis).astype(float))
    add("cip.command", aggregate_categorical(ts, commands, axis), CATEGORICAL, NO_TRAFFIC)
    add("cip.status", aggregate_categorical(ts, statuses, axis), CATEGORICAL, NO_TRAFFIC)
    add("cip.orig_addr_mode", aggregate_categorical(ts, [r.orig_addr for r in records], axis),
        CATEGORICAL, NO_TRAFFIC)
    add("cip.resp_addr_mode", aggregate_categorical(ts, [r.resp_addr for r in records], axis),
        CATEGORICAL, NO_TRAFFIC)
    return FrameTable(axis[0], axis[1], cols, meta, {"cip": counts})


def process_frames(samples: Sequence[ProcessSample], axis: tuple[int, int] | None = None,
                   threshold: float = SPIKE_THRESHOLD, window: int = SPIKE_WINDOW) -> FrameTable:
    by_tag: dict[str, list[ProcessSample]] = {}
    for s in samples:
        by_tag.setdefault(s.tag, []).append(s)
    axis = axis or _span([s.ts for s in samples])
    cols: dict[str, np.ndarray] = {}
    meta: dict[str, FeatureMeta] = {}
    present_ts = [s.ts for s in samples if not s.missing]
    coverage = count_per_second(np.array(present_ts, dtype=float), axis) if present_ts \
        else np.zeros(axis[1] - axis[0], dtype=np.int64)
    for tag, group in by_tag.items():
        ts = np.array([s.ts for s in group], dtype=float)
        values = [s.value for s in group]
        name = f"proc.{tag}"
        if group[0].kind == ACTUATOR:
            symbols = [None if v is None else str(v) for v in values]
            cols[name] = aggregate_categorical(ts, symbols, axis)
            meta[name] = FeatureMeta("proc", CATEGORICAL)
        else:
            cols[name] = aggregate_numeric(ts, values, axis)
            meta[name] = FeatureMeta("proc", NUMERIC)
            std, spike = derive_window_stats(ts, values, axis, threshold, window)
            cols[name + ".std"] = std
            meta[name + ".std"] = FeatureMeta("proc", NUMERIC)
            cols[name + ".spike"] = spike.astype(float)
            meta[name + ".spike"] = FeatureMeta("proc", NUMERIC)
    return FrameTable(axis[0], axis[1], cols, meta, {"proc": coverage})


def align(*tables: FrameTable) -> FrameTable:
    """Intersect the tables' time axes and merge their columns."""
    if not tables:
        raise ValueError("nothing to align")
    start = max(t.start for t in tables)
    end = min(t.end for t in tables)
    if end <= start:
        raise NoOverlap(
            "stream spans do not intersect: "
            + ", ".join(f"[{t.start},{t.end})" for t in tables)
        )
    cols, meta, cov = {}, {}, {}
    for t in tables:
        part = t.slice(start, end)
        clash = set(cols) & set(part.columns)
        if clash:
            raise ValueError(f"duplicate feature names: {sorted(clash)}")
        cols.update(part.columns)
        meta.update(part.meta)
        cov.update(part.coverage)
    return FrameTable(start, end, cols, meta, cov)


def fill_gaps(table: FrameTable) -> FrameTable:
    cols = {}
    for name, values in table.columns.items():
        m = table.meta[name]
        try:
            if m.kind == NUMERIC:
                cols[name] = interpolate(values)
            else:
                cols[name] = fill_categorical(values, m.fill)
        except EmptySeries as exc:
            raise EmptySeries(f"{name}: {exc}") from None
    return FrameTable(table.start, table.end, cols, dict(table.meta), dict(table.coverage), table.labels)


# -- labelling ----------------------------------------------------------------

@dataclass(frozen=True)
class AttackWindow:
    id: str
    start_ts: int
    end_ts: int
    category: str = "network"
    description: str = ""

    def __post_init__(self):
        if self.start_ts > self.end_ts:
            raise ValueError(f"window {self.id}: start {self.start_ts} after end {self.end_ts}")
        if self.category not in ATTACK_CATEGORIES:
            raise ValueError(f"window {self.id}: unknown category {self.category!r}")

    def __contains__(self, second) -> bool:
        return self.start_ts <= second <= self.end_ts

    @property
    def length(self) -> int:
        return self.end_ts - self.start_ts + 1


def check_windows(windows: Sequence[AttackWindow], exc=OverlapError) -> list[AttackWindow]:
    ordered = sorted(windows, key=lambda w: (w.start_ts, w.end_ts))
    for a, b in zip(ordered, ordered[1:]):
        if b.start_ts <= a.end_ts:
            raise exc(f"attack windows {a.id} and {b.id} overlap")
    return ordered


def label_seconds(seconds, windows: Sequence[AttackWindow]) -> np.ndarray:
    """1 where a second lies inside some window (both ends inclusive), else 0."""
    ordered = check_windows(windows)
    sec = np.asarray(seconds)
    labels = np.zeros(len(sec), dtype=np.int64)
    for w in ordered:
        labels[(sec >= w.start_ts) & (sec <= w.end_ts)] = MALICIOUS
    return labels


def label_frames(table: FrameTable, windows: Sequence[AttackWindow]) -> FrameTable:
    return FrameTable(table.start, table.end, table.columns, table.meta, table.coverage,
                      label_seconds(table.seconds, windows))


SCHEDULE_FIELDS = ["id", "start_ts", "end_ts", "category", "description"]


def read_attack_windows(stream) -> list[AttackWindow]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or list(reader.fieldnames)[:3] != SCHEDULE_FIELDS[:3]:
        raise ValueError(f"attack schedule header must be {','.join(SCHEDULE_FIELDS)}")
    return [
        AttackWindow(row["id"], int(float(row["start_ts"])), int(float(row["end_ts"])),
                     row.get("category") or "network", row.get("description") or "")
        for row in reader
    ]


def write_attack_windows(windows: Sequence[AttackWindow], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SCHEDULE_FIELDS)
    for w in windows:
        writer.writerow([w.id, w.start_ts, w.end_ts, w.category, w.description])


# -- pipeline + persistence ---------------------------------------------------

def fuse(conn: Sequence[ConnRecord], cip: Sequence[CipRecord], samples: Sequence[ProcessSample],
         windows: Sequence[AttackWindow] = (), threshold: float = SPIKE_THRESHOLD,
         window: int = SPIKE_WINDOW) -> FrameTable:
    """Aggregate each stream, align on the shared span, fill gaps and label."""
    tables = [conn_frames(conn), cip_frames(cip), process_frames(samples, None, threshold, window)]
    return label_frames(fill_gaps(align(*tables)), windows)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return str(int(f)) if f.is_integer() and abs(f) < 1e15 else repr(f)
    return str(v)


def write_fused(table: FrameTable, csv_path: str | Path, manifest_path: str | Path,
                extra: dict | None = None) -> None:
    names = table.feature_names
    labels = table.labels if table.labels is not None else np.zeros(len(table), dtype=np.int64)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["second", *names, "label"])
        cols = [table.columns[n].tolist() for n in names]
        for i, sec in enumerate(range(table.start, table.end)):
            w.writerow([sec, *(_fmt(c[i]) for c in cols), int(labels[i])])
    manifest = {
        "rows": len(table),
        "start": table.start,
        "end": table.end,
        "features": {
            n: {"source": table.meta[n].source, "kind": table.meta[n].kind,
                "purdue_level": table.meta[n].level}
            for n in names
        },
        "coverage_totals": {s: int(c.sum()) for s, c in sorted(table.coverage.items())},
        "malicious_seconds": int(labels.sum()),
    }
    if extra:
        manifest.update(extra)
    Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=False) + "\n")


def read_fused(csv_path: str | Path, manifest_path: str | Path) -> FrameTable:
    manifest = json.loads(Path(manifest_path).read_text())
    feats = manifest["features"]
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "second" or header[-1] != "label":
            raise ValueError("fused CSV must start with 'second' and end with 'label'")
        names = header[1:-1]
        missing = [n for n in names if n not in feats]
        if missing:
            raise ValueError(f"manifest lacks features: {missing[:5]}")
        rows = list(reader)
    seconds = np.array([int(r[0]) for r in rows], dtype=np.int64)
    if len(seconds) and not np.array_equal(seconds, np.arange(seconds[0], seconds[0] + len(seconds))):
        raise ValueError("fused CSV seconds must be contiguous")
    cols, meta = {}, {}
    for j, name in enumerate(names, start=1):
        kind = feats[name]["kind"]
        raw = [r[j] for r in rows]
        cols[name] = np.array(raw, dtype=float) if kind == NUMERIC else np.array(raw, dtype=object)
        meta[name] = FeatureMeta(feats[name]["source"], kind)
    labels = np.array([int(r[-1]) for r in rows], dtype=np.int64)
    start = int(seconds[0]) if len(seconds) else int(manifest.get("start", 0))
    return FrameTable(start, start + len(rows), cols, meta, {}, labels)

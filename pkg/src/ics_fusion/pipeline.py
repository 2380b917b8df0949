"""Raw scenario directory -> fused, labelled frame table."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import StageError
from .fusion import (
    SPIKE_THRESHOLD, SPIKE_WINDOW, FrameTable, fuse, read_attack_windows, read_fused, write_fused,
)
from .ingest import parse_cip_log, parse_conn_log, parse_process_csv

RAW_FILES = ("conn.log", "cip.log", "process.csv", "attacks.csv")
FUSED_CSV = "fused.csv"
FUSED_MANIFEST = "features.json"


@dataclass
class BuildResult:
    table: FrameTable
    parse_stats: dict


def build_from_raw(raw_dir: str | Path, threshold: float = SPIKE_THRESHOLD,
                   window: int = SPIKE_WINDOW) -> BuildResult:
    raw = Path(raw_dir)
    missing = [f for f in RAW_FILES if not (raw / f).is_file()]
    if missing:
        raise FileNotFoundError(f"{raw}: missing {', '.join(missing)}")
    try:
        with open(raw / "conn.log") as fh:
            conn, conn_stats = parse_conn_log(fh)
        with open(raw / "cip.log") as fh:
            cip, cip_stats = parse_cip_log(fh)
    except Exception as exc:
        raise StageError("ingest", exc) from exc
    try:
        with open(raw / "process.csv", newline="") as fh:
            samples, proc_stats = parse_process_csv(fh)
        with open(raw / "attacks.csv", newline="") as fh:
            windows = read_attack_windows(fh)
    except Exception as exc:
        raise StageError("ingest", exc) from exc
    try:
        table = fuse(conn, cip, samples, windows, threshold, window)
    except Exception as exc:
        raise StageError("fusion", exc) from exc
    stats = {"conn": conn_stats.to_dict(), "cip": cip_stats.to_dict(), "process": proc_stats.to_dict()}
    return BuildResult(table, stats)


def write_dataset(result: BuildResult, out_dir: str | Path, extra: dict | None = None) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, man_path = out / FUSED_CSV, out / FUSED_MANIFEST
    write_fused(result.table, csv_path, man_path, {"parse_stats": result.parse_stats, **(extra or {})})
    return csv_path, man_path


def load_dataset(spec: dict) -> FrameTable:
    """``{"csv", "manifest"}`` reads a fused dataset; ``{"raw_dir"}`` builds one."""
    if "raw_dir" in spec:
        return build_from_raw(spec["raw_dir"]).table
    if "csv" in spec:
        csv_path = Path(spec["csv"])
        man = Path(spec.get("manifest", csv_path.with_name(FUSED_MANIFEST)))
        return read_fused(csv_path, man)
    raise ValueError("dataset needs either 'csv' (+ 'manifest') or 'raw_dir'")

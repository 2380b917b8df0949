"""Report assembly: per-cell CSV, recall histograms, JSON summary, figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..features import SINGLE_SOURCE
from .experiment import CellResult
from .metrics import summarize

REPORT_FIELDS = [
    "config", "model", "smote", "tp", "fp", "tn", "fn", "recall", "weighted_precision",
    "precision_attack", "precision_benign", "recall_benign", "flags", "n_train", "n_train_pos",
    "n_features", "n_components", "best_params", "status",
]
BIN_WIDTH = 0.05
N_BINS = 20
SECTIONS = ("baseline", "single_smote", "combined", "combined_smote")


def _num(x: float) -> str:
    # repr round-trips exactly, so recomputation from the CSV compares equal
    return repr(float(x))


def report_rows(results: list[CellResult]) -> list[dict]:
    rows = []
    for r in results:
        row = {"config": r.cell.config, "model": r.cell.model, "smote": "on" if r.cell.smote else "off"}
        if r.ok:
            s = summarize(r.cm)
            row.update(
                tp=s["tp"], fp=s["fp"], tn=s["tn"], fn=s["fn"],
                recall=_num(s["recall"]), weighted_precision=_num(s["weighted_precision"]),
                precision_attack=_num(s["precision_attack"]),
                precision_benign=_num(s["precision_benign"]),
                recall_benign=_num(s["recall_benign"]), flags=";".join(s["flags"]),
                n_train=r.n_train, n_train_pos=r.n_train_pos, n_features=r.n_features,
                n_components=r.n_components,
                best_params=json.dumps(r.best_params, sort_keys=True, separators=(",", ":")),
                status="ok",
            )
        else:
            row.update({k: "" for k in REPORT_FIELDS if k not in row})
            row["status"] = "error: " + r.error.replace("\n", " ")
        rows.append(row)
    return rows


def write_report_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def read_report_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_timings_csv(results: list[CellResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "model", "smote", "train_seconds"])
        for r in results:
            w.writerow([r.cell.config, r.cell.model, "on" if r.cell.smote else "off",
                        f"{r.train_seconds:.3f}"])


def section_of(config: str, smote: bool) -> str:
    single = config in SINGLE_SOURCE
    if single:
        return "single_smote" if smote else "baseline"
    return "combined_smote" if smote else "combined"


def bin_index(value: float) -> int:
    # [0, .05), [.05, .10), ... , [.95, 1.0]; the top bin is closed
    return min(int(np.floor(value / BIN_WIDTH + 1e-12)), N_BINS - 1)


def recall_histograms(rows: list[dict]) -> dict[str, list[int]]:
    """Count successful cells per recall bin for each section that has cells."""
    hist: dict[str, list[int]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        sec = section_of(row["config"], row["smote"] == "on")
        counts = hist.setdefault(sec, [0] * N_BINS)
        counts[bin_index(float(row["recall"]))] += 1
    return {s: hist[s] for s in SECTIONS if s in hist}


def write_histogram_csv(hist: dict[str, list[int]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["section", "bin_lo", "bin_hi", "count"])
        for sec, counts in hist.items():
            for i, c in enumerate(counts):
                w.writerow([sec, f"{i * BIN_WIDTH:.2f}", f"{(i + 1) * BIN_WIDTH:.2f}", c])


def read_histogram_csv(path: str | Path) -> dict[str, list[int]]:
    hist: dict[str, list[int]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            hist.setdefault(row["section"], []).append(int(row["count"]))
    return hist


def summary(rows: list[dict], config: dict) -> dict:
    ok = [r for r in rows if r["status"] == "ok"]
    sections = {}
    for r in ok:
        sec = section_of(r["config"], r["smote"] == "on")
        sections.setdefault(sec, []).append(float(r["recall"]))
    return {
        "cells": len(rows),
        "failed": len(rows) - len(ok),
        "config": config,
        "mean_recall": {s: float(np.mean(v)) for s, v in sections.items()},
        "results": [
            {k: r[k] for k in ("config", "model", "smote", "recall", "weighted_precision", "status")}
            for r in rows
        ],
    }


def render_histograms(hist: dict[str, list[int]], out_dir: str | Path) -> list[Path]:
    """One PNG bar chart per section. matplotlib is imported here only."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    edges = np.arange(N_BINS) * BIN_WIDTH
    paths = []
    for sec, counts in hist.items():
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.bar(edges, counts, width=BIN_WIDTH, align="edge", edgecolor="black")
        ax.set_xlim(0, 1)
        ax.set_xlabel("attack recall")
        ax.set_ylabel("cells")
        ax.set_title(sec.replace("_", " "))
        fig.tight_layout()
        p = out_dir / f"recall_hist_{sec}.png"
        fig.savefig(p, dpi=100)
        plt.close(fig)
        paths.append(p)
    return paths

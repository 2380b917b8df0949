"""``ics-fusion`` command line: simulate, build-dataset, train, evaluate, experiment, report."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigError, IcsFusionError
from .features import FeatureEncoder, select_config
from .reduce import PcaState, transform

log = logging.getLogger("ics_fusion")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
MANIFEST = "manifest.json"
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


class OutputExists(IcsFusionError):
    pass


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    config: dict
    seed: int | None
    tool_version: str = __version__
    started: float = field(default_factory=time.time)
    finished: float | None = None
    outputs: list[str] = field(default_factory=list)
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "command": self.command, "config_path": self.config_path, "config": self.config,
            "seed": self.seed, "tool_version": self.tool_version,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(self.started)),
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(self.finished or time.time())),
            "outputs": sorted(self.outputs), "status": self.status,
        }


class OutputDir:
    """The single writer for one output directory; it owns ``manifest.json``."""

    def __init__(self, path: str | Path, force: bool):
        self.path = Path(path)
        if (self.path / MANIFEST).exists() and not force:
            raise OutputExists(f"{self.path / MANIFEST} exists; pass --force to overwrite")
        self.path.mkdir(parents=True, exist_ok=True)

    def finish(self, manifest: RunManifest) -> None:
        manifest.finished = time.time()
        (self.path / MANIFEST).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def _load_json(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}", path) from None
    if not isinstance(data, dict):
        raise ConfigError("<file>", "top level must be an object", path)
    return data


def _rel(paths, base: Path) -> list[str]:
    return [str(Path(p).relative_to(base)) for p in paths]


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .simulate import ScenarioConfig, run_scenario, write_scenario

    raw = _load_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = ScenarioConfig.from_dict(raw, args.config)
    out = OutputDir(args.out, args.force)
    man = RunManifest("simulate", args.config, cfg.to_dict(), cfg.seed)
    result = run_scenario(cfg)
    paths = write_scenario(result, out.path)
    man.outputs = _rel(paths.values(), out.path)
    out.finish(man)
    log.info("simulated %d s into %s", cfg.duration, out.path)
    return EXIT_OK


# -- build-dataset --------------------------------------------------------------

def cmd_build_dataset(args) -> int:
    from .fusion import SPIKE_THRESHOLD, SPIKE_WINDOW
    from .pipeline import build_from_raw, write_dataset

    raw = _load_json(args.config)
    unknown = set(raw) - {"spike_threshold", "spike_window"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key", args.config)
    threshold = raw.get("spike_threshold", SPIKE_THRESHOLD)
    window = raw.get("spike_window", SPIKE_WINDOW)
    if not isinstance(threshold, (int, float)) or threshold <= 0:
        raise ConfigError("spike_threshold", "must be a positive number", args.config)
    if not isinstance(window, int) or window < 2:
        raise ConfigError("spike_window", "must be an integer >= 2", args.config)
    out = OutputDir(args.out, args.force)
    result = build_from_raw(args.raw_dir, threshold, window)
    paths = write_dataset(result, out.path, {"raw_dir": str(args.raw_dir)})
    man = RunManifest("build-dataset", args.config,
                      {"raw_dir": str(args.raw_dir), "spike_threshold": threshold, "spike_window": window},
                      None, outputs=_rel(paths, out.path))
    out.finish(man)
    log.info("fused %d seconds, %d features", len(result.table), len(result.table.feature_names))
    return EXIT_OK


# -- experiment / train -------------------------------------------------------------

def _config_error(key: str):
    def fail(message):
        raise ConfigError(key, message)
    return fail


def _experiment_config(args):
    from .eval import ExperimentConfig, SplitSpec
    from .eval.experiment import SMOTE_MODES, parse_configs, parse_models

    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.split = SplitSpec(cfg.split.ratio, cfg.split.mode, args.seed)
    if getattr(args, "dataset", None):
        cfg.dataset = {"csv": args.dataset}
    if args.configs:
        cfg.configs = parse_configs(args.configs, _config_error("--configs"))
    if args.models:
        cfg.models = parse_models(args.models, _config_error("--models"))
    if args.smote:
        cfg.smote_modes = SMOTE_MODES[args.smote]
    if not cfg.dataset:
        raise ConfigError("dataset", "no dataset given (config 'dataset' or --dataset)", args.config)
    return cfg


def _save_cell_models(results, out: Path, encoder_name: str) -> list[Path]:
    from .models import make_model, save_model

    written = []
    for r in results:
        if not r.ok:
            continue
        model = make_model(r.cell.model, r.best_params, r.model_seed)
        model.set_state(r.model_state)
        d = out / "models" / r.cell.slug
        save_model(model, d, {
            "config": r.cell.config, "smote": r.cell.smote,
            "preprocessing": {"encoder": f"../../{encoder_name}",
                              "pca": r.pca.to_dict() if r.pca is not None else None},
            "n_train": r.n_train, "n_train_pos": r.n_train_pos,
        })
        written += [d / "model.json", d / "model.npz"]
    return written


def _run_matrix(args):
    from .eval import prepare_data, run_experiment
    from .pipeline import load_dataset

    cfg = _experiment_config(args)
    out = OutputDir(args.out, args.force)
    table = load_dataset(cfg.dataset)
    data = prepare_data(table, cfg)
    enc_path = out.path / "encoder.json"
    enc_path.write_text(json.dumps({"split": {"train": int(len(data.split.train)),
                                              "test": int(len(data.split.test))},
                                    **data.encoder.to_dict()}) + "\n")

    def progress(r):
        log.info("%s %s", r.cell.id, "ok" if r.ok else r.error)

    results = run_experiment(data, cfg, jobs=args.jobs, progress=progress)
    return cfg, out, data, results, [enc_path]


def cmd_experiment(args) -> int:
    from .eval.report import (
        recall_histograms, report_rows, summary, write_histogram_csv, write_report_csv,
        write_timings_csv,
    )

    cfg, out, data, results, written = _run_matrix(args)
    rows = report_rows(results)
    p = out.path
    write_report_csv(rows, p / "report.csv")
    write_timings_csv(results, p / "timings.csv")
    hist = recall_histograms(rows)
    write_histogram_csv(hist, p / "histograms.csv")
    (p / "summary.json").write_text(json.dumps(summary(rows, cfg.to_dict()), indent=2) + "\n")
    written += [p / n for n in ("report.csv", "timings.csv", "histograms.csv", "summary.json")]
    written += _save_cell_models(results, p, "encoder.json")
    failed = sum(not r.ok for r in results)
    man = RunManifest("experiment", args.config, cfg.to_dict(), cfg.seed, outputs=_rel(written, p),
                      status="ok" if not failed else f"{failed} cells failed")
    out.finish(man)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_train(args) -> int:
    cfg, out, data, results, written = _run_matrix(args)
    written += _save_cell_models(results, out.path, "encoder.json")
    failed = sum(not r.ok for r in results)
    man = RunManifest("train", args.config, cfg.to_dict(), cfg.seed, outputs=_rel(written, out.path),
                      status="ok" if not failed else f"{failed} cells failed")
    out.finish(man)
    return EXIT_PARTIAL if failed else EXIT_OK


# -- evaluate -----------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    from .eval.metrics import confusion_matrix, summarize
    from .models import load_model
    from .pipeline import load_dataset

    model_dir = Path(args.model)
    model, manifest = load_model(model_dir)
    pre = manifest.get("preprocessing", {})
    enc_file = (model_dir / pre.get("encoder", "encoder.json")).resolve()
    encoder = FeatureEncoder.from_dict(json.loads(enc_file.read_text()))
    table = load_dataset({"csv": args.dataset})
    matrix = select_config(encoder.transform(table, None, "test"), manifest["config"])
    X = matrix.X
    if pre.get("pca"):
        X = transform(X, PcaState.from_dict(pre["pca"]))
    cm = confusion_matrix(matrix.y, model.predict(X))
    result = {"model": str(model_dir), "dataset": str(args.dataset), "rows": len(matrix),
              **summarize(cm)}
    text = json.dumps(result, indent=2) + "\n"
    if args.out:
        out = OutputDir(args.out, args.force)
        (out.path / "metrics.json").write_text(text)
        out.finish(RunManifest("evaluate", None, {"model": str(model_dir), "dataset": str(args.dataset)},
                               manifest.get("seed"), outputs=["metrics.json"]))
    sys.stdout.write(text)
    return EXIT_OK


# -- report -------------------------------------------------------------------------

def cmd_report(args) -> int:
    from .eval.report import read_histogram_csv, render_histograms

    src = Path(args.experiment_dir)
    hist = read_histogram_csv(src / "histograms.csv")
    out = OutputDir(args.out or (src / "figures"), args.force)
    paths = render_histograms(hist, out.path)
    out.finish(RunManifest("report", None, {"experiment_dir": str(src)}, None,
                           outputs=_rel(paths, out.path)))
    for p in paths:
        print(p)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ics-fusion", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON config file")
        if seed:
            p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--force", action="store_true", help="overwrite an existing output manifest")

    p = sub.add_parser("simulate", help="generate a scenario: Zeek logs, process CSV, attack schedule")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-dataset", help="ingest and fuse a scenario directory")
    p.add_argument("raw_dir")
    common(p, seed=False)
    p.set_defaults(func=cmd_build_dataset)

    for name, func, hlp in (("experiment", cmd_experiment, "run the evaluation matrix"),
                            ("train", cmd_train, "fit and save models for selected cells")):
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.add_argument("--dataset", help="fused CSV (overrides config dataset)")
        p.add_argument("--jobs", type=int, default=1, help="parallel matrix cells")
        p.add_argument("--configs", help="comma-separated dataset configs")
        p.add_argument("--models", help="comma-separated model families")
        p.add_argument("--smote", choices=["on", "off", "both"])
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="score a saved model on a fused dataset")
    p.add_argument("--model", required=True, help="model artifact directory")
    p.add_argument("--dataset", required=True, help="fused CSV")
    p.add_argument("--out", help="write metrics.json here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render recall histograms from an experiment directory")
    p.add_argument("experiment_dir")
    p.add_argument("--out", help="figure directory (default: <experiment_dir>/figures)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def setup_logging() -> None:
    level = os.environ.get("ICS_FUSION_LOG_LEVEL", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (IcsFusionError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Scenario runner: plant + traffic + attack script -> Zeek logs, process CSV, schedule."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, OverlappingWindows
from ..fusion import AttackWindow, check_windows, write_attack_windows
from ..ingest import CipRecord, ConnRecord, write_cip_log, write_conn_log
from .plant import (
    ACTUATOR_TAGS, ALL_TAGS, SENSOR_TAGS, PlantConfig, PlantState, initial_state, sense, step_plant,
)
from .traffic import CIP_PORT, TrafficConfig, TrafficGenerator, plc_addr

SENSOR_SPOOF = "sensor_spoof"
ACTUATOR_MANIPULATION = "actuator_manipulation"
NETWORK_FLOOD = "network_flood"
ATTACK_KINDS = {
    SENSOR_SPOOF: "process",
    ACTUATOR_MANIPULATION: "cross-layer",
    NETWORK_FLOOD: "network",
}

DEFAULT_START_TS = 1647312000
DEFAULT_DURATION = 13_500  # 3 h 45 min

# offsets in seconds from the scenario start, inclusive at both ends
DEFAULT_ATTACKS = [
    {"id": "A1", "kind": SENSOR_SPOOF, "start": 900, "end": 1079, "target": "LIT101", "magnitude": 450.0,
     "description": "LIT101 frozen high; inlet valve held shut while P101 drains the tank"},
    {"id": "A2", "kind": NETWORK_FLOOD, "start": 2400, "end": 2549, "target": "PLC3", "magnitude": 200,
     "description": "SYN flood against PLC3 from a rogue host"},
    {"id": "A3", "kind": ACTUATOR_MANIPULATION, "start": 3900, "end": 4079, "target": "P102", "magnitude": 2,
     "description": "standby pump P102 forced on via CIP writes"},
    {"id": "A4", "kind": SENSOR_SPOOF, "start": 5400, "end": 5579, "target": "LIT301", "magnitude": -380.0,
     "description": "LIT301 frozen low; P201 overfills stage 3"},
    {"id": "A5", "kind": NETWORK_FLOOD, "start": 6900, "end": 7049, "target": "PLC1", "magnitude": 300,
     "description": "SYN flood against PLC1 from a rogue host"},
    {"id": "A6", "kind": ACTUATOR_MANIPULATION, "start": 8400, "end": 8579, "target": "MV101", "magnitude": 1,
     "description": "inlet valve MV101 forced closed via CIP writes"},
    {"id": "A7", "kind": SENSOR_SPOOF, "start": 10000, "end": 10179, "target": "AIT201", "magnitude": 60.0,
     "description": "conductivity analyser AIT201 frozen with an offset"},
    {"id": "A8", "kind": NETWORK_FLOOD, "start": 11500, "end": 11649, "target": "PLC5", "magnitude": 200,
     "description": "SYN flood against PLC5 from a rogue host"},
]


@dataclass(frozen=True)
class AttackStep:
    window: AttackWindow
    kind: str
    target: str
    magnitude: float
    source: str = "192.168.1.66"


@dataclass
class ScenarioConfig:
    duration: int = DEFAULT_DURATION
    seed: int = 0
    start_ts: int = DEFAULT_START_TS
    plant: PlantConfig = field(default_factory=PlantConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    attacks: list[dict] = field(default_factory=lambda: [dict(a) for a in DEFAULT_ATTACKS])

    @classmethod
    def from_dict(cls, d: dict | None, path: str | None = None, prefix: str = "") -> "ScenarioConfig":
        d = dict(d or {})
        known = {"duration", "seed", "start_ts", "plant", "traffic", "attacks"}
        for key in d:
            if key not in known:
                raise ConfigError(prefix + key, "unknown key", path)
        cfg = cls()
        for key in ("duration", "seed", "start_ts"):
            if key in d:
                value = d[key]
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ConfigError(prefix + key, f"must be an integer, got {value!r}", path)
                setattr(cfg, key, value)
        if cfg.duration <= 0:
            raise ConfigError(prefix + "duration", f"must be positive, got {cfg.duration}", path)
        if cfg.start_ts <= 0:
            raise ConfigError(prefix + "start_ts", "must be a positive epoch second", path)
        for key, klass in (("plant", PlantConfig), ("traffic", TrafficConfig)):
            if key in d:
                try:
                    setattr(cfg, key, klass.from_dict(d[key]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"{prefix}{key}.{exc.args[0] if exc.args else ''}",
                                      "invalid or unknown setting", path) from None
        if "attacks" in d:
            if not isinstance(d["attacks"], list):
                raise ConfigError(prefix + "attacks", "must be a list", path)
            cfg.attacks = [dict(a) for a in d["attacks"]]
        try:
            cfg.script()
        except (KeyError, ValueError) as exc:
            raise ConfigError(prefix + "attacks", str(exc), path) from None
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["plant"]["pump_rates"] = list(self.plant.pump_rates)
        d["plant"]["analyser_base"] = list(self.plant.analyser_base)
        d["traffic"]["workstations"] = list(self.traffic.workstations)
        return d

    def script(self) -> list[AttackStep]:
        return build_script(self.attacks, self.start_ts, self.duration)


def build_script(attacks: list[dict], start_ts: int, duration: int) -> list[AttackStep]:
    """Turn offset-based attack specs into absolute, validated attack steps."""
    steps = []
    for i, a in enumerate(attacks):
        kind = a["kind"]
        if kind not in ATTACK_KINDS:
            raise ValueError(f"attack {i}: unknown kind {kind!r}")
        lo, hi = int(a["start"]), int(a["end"])
        if not 0 <= lo <= hi < duration:
            raise ValueError(f"attack {a.get('id', i)}: window [{lo}, {hi}] outside [0, {duration})")
        target = str(a["target"])
        magnitude = float(a["magnitude"])
        if kind == SENSOR_SPOOF and target not in SENSOR_TAGS:
            raise ValueError(f"attack {a.get('id', i)}: {target} is not a sensor tag")
        if kind == ACTUATOR_MANIPULATION:
            if target not in ACTUATOR_TAGS:
                raise ValueError(f"attack {a.get('id', i)}: {target} is not an actuator tag")
            if magnitude not in (0, 1, 2):
                raise ValueError(f"attack {a.get('id', i)}: actuator code must be 0, 1 or 2")
        if kind == NETWORK_FLOOD and magnitude < 1:
            raise ValueError(f"attack {a.get('id', i)}: flood rate must be >= 1")
        window = AttackWindow(str(a.get("id", f"A{i + 1}")), start_ts + lo, start_ts + hi,
                              ATTACK_KINDS[kind], str(a.get("description", "")))
        steps.append(AttackStep(window, kind, target, magnitude, str(a.get("source", "192.168.1.66"))))
    check_windows([s.window for s in steps], OverlappingWindows)
    return sorted(steps, key=lambda s: s.window.start_ts)


def _resolve_host(target: str) -> str:
    if target.upper().startswith("PLC"):
        return plc_addr(int(target[3:]))
    return target


def _owner_plc(tag: str) -> str:
    return plc_addr(int(tag[-3]))


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    conn: list[ConnRecord]
    cip: list[CipRecord]
    process_rows: list[tuple[int, dict]]     # (second, {tag: reported value})
    true_levels: np.ndarray                   # (duration, 6)
    windows: list[AttackWindow]
    steps: list[AttackStep]


def emit_flood(step: AttackStep, second: int, rng: np.random.Generator, counter: list[int]) -> list[ConnRecord]:
    """``magnitude`` half-open connection attempts from a rogue host within one second."""
    n = int(step.magnitude)
    offsets = np.sort(rng.random(n))
    ports = rng.integers(1024, 65536, size=n)
    target = _resolve_host(step.target)
    out = []
    for off, port in zip(offsets, ports):
        counter[0] += 1
        out.append(ConnRecord(round(second + float(off), 6), f"F{counter[0]:011x}", step.source,
                              int(port), target, CIP_PORT, "tcp", None, None, 0, 0, "S0", 1, 0))
    return out


def emit_write(step: AttackStep, second: int, rng: np.random.Generator, scada: str,
               counter: list[int]) -> CipRecord:
    counter[0] += 1
    return CipRecord(round(second + 0.02 + 0.9 * float(rng.random()), 6), f"W{counter[0]:011x}",
                     scada, _owner_plc(step.target), "write-tag", "success", 32, 8)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    steps = cfg.script()
    plant_seq, traffic_seq, flood_seq, write_seq = np.random.SeedSequence(cfg.seed).spawn(4)
    plant_rng = np.random.default_rng(plant_seq)
    flood_rng = np.random.default_rng(flood_seq)
    write_rng = np.random.default_rng(write_seq)
    traffic = TrafficGenerator(cfg.traffic, np.random.default_rng(traffic_seq))

    state: PlantState = initial_state(cfg.plant, cfg.start_ts)
    seen = dict(state.readings)
    conns: list[ConnRecord] = []
    cips: list[CipRecord] = []
    rows: list[tuple[int, dict]] = []
    true_levels = np.empty((cfg.duration, 6))
    frozen: dict[str, float] = {}
    counters = {"flood": [0], "write": [0]}

    for i in range(cfg.duration):
        second = cfg.start_ts + i
        active = [s for s in steps if second in s.window]
        forced = {s.target: int(s.magnitude) for s in active if s.kind == ACTUATOR_MANIPULATION}

        state = step_plant(state, cfg.plant, seen=seen, forced=forced or None)
        readings = sense(state, cfg.plant, plant_rng)
        for s in steps:
            if s.kind != SENSOR_SPOOF:
                continue
            if second in s.window:
                frozen.setdefault(s.window.id, readings[s.target])
                readings[s.target] = frozen[s.window.id] + s.magnitude
        state.readings = readings
        seen = readings
        true_levels[i] = state.levels

        row = {t: readings[t] for t in SENSOR_TAGS}
        row.update({t: state.actuators[t] for t in ACTUATOR_TAGS})
        rows.append((second, row))

        c, p = traffic.emit(second)
        for s in active:
            if s.kind == NETWORK_FLOOD:
                c = c + emit_flood(s, second, flood_rng, counters["flood"])
            elif s.kind == ACTUATOR_MANIPULATION:
                p = p + [emit_write(s, second, write_rng, cfg.traffic.scada_addr, counters["write"])]
        c.sort(key=lambda r: r.ts)
        p.sort(key=lambda r: r.ts)
        conns.extend(c)
        cips.extend(p)

    return ScenarioResult(cfg, conns, cips, rows, true_levels, [s.window for s in steps], steps)


def write_process_csv(rows: list[tuple[int, dict]], stream, tags: list[str] = ALL_TAGS) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["timestamp", *tags])
    for second, values in rows:
        cells = []
        for t in tags:
            v = values.get(t)
            if v is None:
                cells.append("")
            elif t in ACTUATOR_TAGS:
                cells.append(str(int(v)))
            else:
                cells.append(f"{v:.4f}")
        w.writerow([second, *cells])


OUTPUT_FILES = ("conn.log", "cip.log", "process.csv", "attacks.csv", "scenario.json")


def write_scenario(result: ScenarioResult, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in OUTPUT_FILES}
    with open(paths["conn.log"], "w", newline="\n") as fh:
        write_conn_log(result.conn, fh)
    with open(paths["cip.log"], "w", newline="\n") as fh:
        write_cip_log(result.cip, fh)
    with open(paths["process.csv"], "w", newline="") as fh:
        write_process_csv(result.process_rows, fh)
    with open(paths["attacks.csv"], "w", newline="") as fh:
        write_attack_windows(result.windows, fh)
    summary = {
        "config": result.config.to_dict(),
        "records": {"conn": len(result.conn), "cip": len(result.cip),
                    "process_rows": len(result.process_rows)},
        "attacks": [
            {"id": s.window.id, "kind": s.kind, "start_ts": s.window.start_ts,
             "end_ts": s.window.end_ts, "target": s.target, "magnitude": s.magnitude}
            for s in result.steps
        ],
        "malicious_seconds": sum(w.length for w in result.windows),
    }
    paths["scenario.json"].write_text(json.dumps(summary, indent=2) + "\n")
    return paths

"""Six-stage water-treatment plant: chained tanks under hysteresis PLC control.

Stage ``s`` owns a tank (``LIT{s}01``), the flow meter on its inlet
(``FIT{s}01``), an analyser (``AIT{s}01``, stage 1 has the inlet valve
``MV101`` instead), a duty pump ``P{s}01`` and a standby pump ``P{s}02``.
Pumps of stage ``s < 6`` move water into stage ``s + 1``; stage 6 pumps
deliver product water out of the plant.

Actuator codes: valves 1 = closed, 2 = open; pumps 1 = off, 2 = on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_STAGES = 6
CLOSED = OFF = 1
OPEN = ON = 2

# m3/h -> mm/s for a tank of area 1 m2
_FLOW_TO_MM = 1000.0 / 3600.0


def stage_tags(s: int) -> list[str]:
    if s == 1:
        return ["FIT101", "LIT101", "MV101", "P101", "P102"]
    return [f"FIT{s}01", f"LIT{s}01", f"AIT{s}01", f"P{s}01", f"P{s}02"]


ALL_TAGS = [t for s in range(1, N_STAGES + 1) for t in stage_tags(s)]
SENSOR_TAGS = [t for t in ALL_TAGS if t[:3] in ("FIT", "LIT", "AIT")]
ACTUATOR_TAGS = [t for t in ALL_TAGS if t not in SENSOR_TAGS]


@dataclass
class PlantConfig:
    area: float = 0.6                      # m2, every tank
    capacity: float = 1200.0               # mm
    low: float = 500.0                     # mm, inflow starts below
    high: float = 800.0                    # mm, inflow stops above
    dry: float = 200.0                     # mm, outflow pump interlock
    inlet_rate: float = 10.0               # m3/h through MV101
    pump_rates: tuple[float, ...] = (8.5, 7.2, 6.0, 4.9, 3.9, 3.0)  # P101 .. P601
    analyser_base: tuple[float, ...] = (0.0, 250.0, 8.2, 160.0, 12.5, 1.1)
    noise: dict = field(default_factory=lambda: {"LIT": 1.0, "FIT": 0.05, "AIT": 0.4})
    initial_level: float = 650.0

    @classmethod
    def from_dict(cls, d: dict | None) -> "PlantConfig":
        d = dict(d or {})
        for key in ("pump_rates", "analyser_base"):
            if key in d:
                d[key] = tuple(float(x) for x in d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise KeyError(sorted(unknown)[0])
        return cls(**d)


@dataclass
class PlantState:
    clock: int
    levels: np.ndarray                 # true tank levels, mm, stage order
    actuators: dict[str, int]          # current actuator codes
    flows: dict[str, float] = field(default_factory=dict)  # true inlet flows, m3/h
    readings: dict[str, float] = field(default_factory=dict)  # reported sensor values

    def copy(self) -> "PlantState":
        return PlantState(self.clock, self.levels.copy(), dict(self.actuators),
                          dict(self.flows), dict(self.readings))


def initial_state(cfg: PlantConfig, clock: int = 0) -> PlantState:
    acts = {t: (OPEN if t == "MV101" else OFF) for t in ACTUATOR_TAGS}
    levels = np.full(N_STAGES, cfg.initial_level)
    readings = {f"LIT{s}01": float(levels[s - 1]) for s in range(1, N_STAGES + 1)}
    return PlantState(clock, levels, acts, {}, readings)


def _hysteresis(current: int, seen_level: float, low: float, high: float) -> int:
    if seen_level < low:
        return ON
    if seen_level > high:
        return OFF
    return current


def control(state: PlantState, cfg: PlantConfig, seen: dict[str, float],
            forced: dict[str, int] | None = None) -> dict[str, int]:
    """PLC logic acting on the *reported* levels in ``seen``."""
    acts = dict(state.actuators)
    acts["MV101"] = _hysteresis(acts["MV101"], seen["LIT101"], cfg.low, cfg.high)
    for s in range(1, N_STAGES):
        tag = f"P{s}01"
        want = _hysteresis(acts[tag], seen[f"LIT{s + 1}01"], cfg.low, cfg.high)
        if seen[f"LIT{s}01"] < cfg.dry:
            want = OFF
        acts[tag] = want
    acts["P601"] = OFF if seen["LIT601"] < cfg.dry else ON
    for s in range(1, N_STAGES + 1):
        acts[f"P{s}02"] = OFF
    if forced:
        acts.update(forced)
    return acts


def step_plant(state: PlantState, cfg: PlantConfig, dt: float = 1.0,
               seen: dict[str, float] | None = None,
               forced: dict[str, int] | None = None) -> PlantState:
    """Advance one tick: control on reported levels, then mass balance on true levels.

    level' = level + dt * (Q_in - Q_out) / A, clamped to [0, capacity]. A
    pump cannot draw more water than its tank holds.
    """
    seen = seen if seen is not None else state.readings
    acts = control(state, cfg, seen, forced)
    levels = state.levels.copy()
    k = dt * _FLOW_TO_MM / cfg.area

    inflow = np.zeros(N_STAGES)
    outflow = np.zeros(N_STAGES)
    inflow[0] = cfg.inlet_rate if acts["MV101"] == OPEN else 0.0
    for s in range(1, N_STAGES + 1):
        running = sum(acts[f"P{s}0{j}"] == ON for j in (1, 2))
        q = running * cfg.pump_rates[s - 1]
        # cannot pump more than the tank holds this tick (plus what flows in)
        avail = (levels[s - 1] + k * inflow[s - 1]) / k if k > 0 else q
        q = min(q, max(avail, 0.0))
        outflow[s - 1] = q
        if s < N_STAGES:
            inflow[s] = q
    levels = np.clip(levels + k * (inflow - outflow), 0.0, cfg.capacity)
    flows = {f"FIT{s}01": float(inflow[s - 1]) for s in range(1, N_STAGES + 1)}
    return PlantState(state.clock + int(dt), levels, acts, flows, dict(state.readings))


def sense(state: PlantState, cfg: PlantConfig, rng: np.random.Generator) -> dict[str, float]:
    """Noisy sensor readings of the true state (one Gaussian draw per sensor tag)."""
    noise = rng.normal(size=len(SENSOR_TAGS))
    out = {}
    for z, tag in zip(noise, SENSOR_TAGS):
        s = int(tag[3])
        kind = tag[:3]
        if kind == "LIT":
            true = state.levels[s - 1]
        elif kind == "FIT":
            true = state.flows.get(tag, 0.0)
        else:
            true = cfg.analyser_base[s - 1]
        out[tag] = float(true + cfg.noise[kind] * z)
    return out

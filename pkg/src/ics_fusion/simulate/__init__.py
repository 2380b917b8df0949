"""Deterministic water-treatment testbed generator."""

from .plant import (
    ACTUATOR_TAGS, ALL_TAGS, SENSOR_TAGS, PlantConfig, PlantState, initial_state, sense, step_plant,
)
from .scenario import (
    ACTUATOR_MANIPULATION, DEFAULT_ATTACKS, NETWORK_FLOOD, OUTPUT_FILES, SENSOR_SPOOF, AttackStep,
    ScenarioConfig, ScenarioResult, build_script, run_scenario, write_process_csv, write_scenario,
)
from .traffic import TrafficConfig, TrafficGenerator, plc_addr

__all__ = [
    "ACTUATOR_MANIPULATION", "ACTUATOR_TAGS", "ALL_TAGS", "DEFAULT_ATTACKS", "NETWORK_FLOOD",
    "OUTPUT_FILES", "SENSOR_SPOOF", "SENSOR_TAGS", "AttackStep", "PlantConfig", "PlantState",
    "ScenarioConfig", "ScenarioResult", "TrafficConfig", "TrafficGenerator", "build_script",
    "initial_state", "plc_addr", "run_scenario", "sense", "step_plant", "write_process_csv",
    "write_scenario",
]

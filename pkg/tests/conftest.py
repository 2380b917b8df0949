from __future__ import annotations

import time
from pathlib import Path

import pytest

from ics_fusion.simulate import ScenarioConfig, run_scenario, write_scenario

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

SMALL_ATTACKS = [
    {"id": "S1", "kind": "sensor_spoof", "start": 300, "end": 479, "target": "LIT101", "magnitude": 450.0},
    {"id": "S2", "kind": "network_flood", "start": 900, "end": 1049, "target": "PLC3", "magnitude": 200},
    {"id": "S3", "kind": "actuator_manipulation", "start": 1500, "end": 1679, "target": "P102",
     "magnitude": 2},
]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def small_config() -> ScenarioConfig:
    return ScenarioConfig.from_dict({"duration": 2400, "seed": 7, "attacks": SMALL_ATTACKS})


@pytest.fixture(scope="session")
def small_scenario(small_config):
    return run_scenario(small_config)


@pytest.fixture(scope="session")
def small_scenario_dir(small_scenario, tmp_path_factory):
    out = tmp_path_factory.mktemp("small_raw")
    write_scenario(small_scenario, out)
    return out


@pytest.fixture(scope="session")
def default_raw_dir(tmp_path_factory):
    """The default 13,500 s scenario, written through the CLI."""
    from ics_fusion.cli import main

    out = tmp_path_factory.mktemp("default") / "raw"
    t0 = time.perf_counter()
    assert main(["simulate", "--seed", "0", "--out", str(out)]) == 0
    out.with_name("simulate_seconds").write_text(f"{time.perf_counter() - t0}")
    return out


@pytest.fixture(scope="session")
def default_dataset_dir(default_raw_dir):
    from ics_fusion.cli import main

    out = default_raw_dir.parent / "dataset"
    t0 = time.perf_counter()
    assert main(["build-dataset", str(default_raw_dir), "--out", str(out)]) == 0
    out.with_name("build_seconds").write_text(f"{time.perf_counter() - t0}")
    return out

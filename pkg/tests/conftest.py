from __future__ import annotations

from pathlib import Path

import pytest

from showersim.telemetry.server import TelemetryHTTPServer
from showersim.telemetry.store import TelemetryStore

TESTS_DIR = Path(__file__).resolve().parent
GOLDEN_DIR = TESTS_DIR / "golden"
SCENARIO_DIR = TESTS_DIR.parent / "scenarios"


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / name


@pytest.fixture
def store(tmp_path) -> TelemetryStore:
    s = TelemetryStore(tmp_path / "data")
    yield s
    s.close()


@pytest.fixture
def sim_server(tmp_path):
    """In-process HTTP server in simulation-time mode."""
    s = TelemetryStore(tmp_path / "server-data")
    server = TelemetryHTTPServer(s, sim_time=True).start()
    yield server
    server.stop()
    s.close()


@pytest.fixture
def wall_server(tmp_path):
    """In-process HTTP server stamping entries with its own clock."""
    s = TelemetryStore(tmp_path / "server-data")
    server = TelemetryHTTPServer(s, sim_time=False).start()
    yield server
    server.stop()
    s.close()

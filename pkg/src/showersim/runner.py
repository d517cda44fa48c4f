"""Clock-driven scenario execution, occupancy analytics and report emission."""

from __future__ import annotations

import json
import math
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .agent import DeviceAgent
from .config import RunConfig, default_run_config
from .controller import ControllerConfig, Occupancy, classify_occupancy
from .scenario import ScenarioValidationError, apply_event
from .sensors import EnvironmentState
from .telemetry.server import TelemetryHTTPServer
from .telemetry.store import TelemetryStore

CSV_COLUMNS = ("time_s", "distance_cm", "temp_c", "humidity_pct", "occupancy", "mode", "entry_id")

OCCUPIED_LABEL = "Shower space occupied"
EMPTY_LABEL = "Shower space empty"


@dataclass(frozen=True)
class ReportRow:
    time_s: float
    distance_cm: int
    temp_c: int
    humidity_pct: int
    occupancy: str
    mode: str
    entry_id: int


@dataclass(frozen=True)
class OccupancyInterval:
    start_s: float
    end_s: Optional[float]  # None: open at the end of the series
    label: str
    entry_distance: float


@dataclass
class Report:
    rows: list = field(default_factory=list)
    transitions: list = field(default_factory=list)  # (time_s, what, before, after)
    alerts: list = field(default_factory=list)
    intervals: list = field(default_factory=list)
    console: list = field(default_factory=list)  # (time_s, rendered block)
    posts_attempted: int = 0
    posts_accepted: int = 0
    posts_dropped: int = 0


class EmbeddedServer:
    """In-process telemetry endpoint for self-contained runs."""

    def __init__(self, field_map: dict):
        self._tmp = tempfile.TemporaryDirectory(prefix="showersim-telemetry-")
        self.store = TelemetryStore(self._tmp.name)
        field_names = [field_map[pos] for pos in sorted(field_map)]
        channel = self.store.create_channel("shower", field_names, visibility="private")
        self.channel_id = channel.channel_id
        self.write_key = channel.write_key
        self.read_key = channel.read_key
        self.server = TelemetryHTTPServer(self.store, sim_time=True).start()
        self.url = self.server.url

    def close(self) -> None:
        self.server.stop()
        self.store.close()
        self._tmp.cleanup()


def run_scenario(
    events,
    config: Optional[RunConfig] = None,
    seed: int = 0,
    server_url: Optional[str] = None,
    write_key: Optional[str] = None,
) -> Report:
    """Step the clock from 0 to the end event, one agent tick per step.

    Events with `at <= t` are applied before the tick at t, so an event on a
    tick boundary is visible to that tick. With no server_url an in-process
    telemetry server is started for the duration of the run.
    """
    config = config or default_run_config()
    if not events or events[-1].kind != "end":
        raise ScenarioValidationError("scenario must finish with an end event")
    tick_s = config.agent.tick_s
    end_time = events[-1].at
    tick_count = int(math.floor(end_time / tick_s + 1e-9)) + 1

    embedded = None
    try:
        if server_url is None:
            embedded = EmbeddedServer(config.agent.field_map)
            server_url = embedded.url
            write_key = embedded.write_key
        agent_cfg = replace(config.agent, server_url=server_url, write_key=write_key or "")
        agent = DeviceAgent(
            agent_cfg,
            controller_cfg=config.controller,
            safety_cfg=config.safety,
            sensor_cfgs=config.sensors,
            profile=config.profile,
            seed=seed,
        )

        env = EnvironmentState()
        report = Report()
        pending = list(events)
        index = 0
        prev_occupancy = Occupancy.EMPTY.value
        prev_mode = "off"
        for k in range(tick_count):
            now = k * tick_s
            while index < len(pending) and pending[index].at <= now + 1e-9:
                apply_event(env, pending[index])
                index += 1
            env.sim_time = now
            result = agent.tick(env, now)
            row = ReportRow(
                time_s=now,
                distance_cm=result.distance_cm,
                temp_c=result.temp_c,
                humidity_pct=result.humidity_pct,
                occupancy=result.occupancy.value,
                mode=result.mode.value,
                entry_id=result.entry_id,
            )
            report.rows.append(row)
            if row.occupancy != prev_occupancy:
                report.transitions.append((now, "occupancy", prev_occupancy, row.occupancy))
            if row.mode != prev_mode:
                report.transitions.append((now, "mode", prev_mode, row.mode))
            prev_occupancy, prev_mode = row.occupancy, row.mode
            report.alerts.extend(result.alerts)
            if result.console is not None:
                report.console.append((now, result.console))

        report.posts_attempted = agent.posts_attempted
        report.posts_accepted = agent.posts_accepted
        report.posts_dropped = agent.posts_dropped
        report.intervals = analyze_occupancy(
            [(row.time_s, row.distance_cm) for row in report.rows], config.controller
        )
        return report
    finally:
        if embedded is not None:
            embedded.close()


def analyze_occupancy(series, cfg: ControllerConfig) -> list:
    """Maximal constant-occupancy intervals over a (time, distance) series.

    Replays the controller's occupancy rule, so interval boundaries coincide
    exactly with its transitions. The shower starts empty.
    """
    intervals = []
    prev = Occupancy.EMPTY
    current = None  # (start, label, entry distance)
    for timestamp, distance in series:
        occupancy = classify_occupancy(distance, prev, cfg)
        if current is None or occupancy is not prev:
            if current is not None:
                intervals.append(OccupancyInterval(current[0], timestamp, current[1], current[2]))
            label = OCCUPIED_LABEL if occupancy is Occupancy.OCCUPIED else EMPTY_LABEL
            current = (timestamp, label, distance)
        prev = occupancy
    if current is not None:
        intervals.append(OccupancyInterval(current[0], None, current[1], current[2]))
    return intervals


def _num(value: float) -> str:
    return f"{value:g}"


def emit_report(report: Report, path, fmt: str) -> list:
    """Write the per-tick table in the requested format plus the alerts file."""
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in report.rows:
            lines.append(
                ",".join(
                    (
                        _num(row.time_s),
                        str(row.distance_cm),
                        str(row.temp_c),
                        str(row.humidity_pct),
                        row.occupancy,
                        row.mode,
                        str(row.entry_id),
                    )
                )
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "jsonl":
        lines = []
        for row in report.rows:
            lines.append(
                json.dumps(
                    {
                        "time_s": row.time_s,
                        "distance_cm": row.distance_cm,
                        "temp_c": row.temp_c,
                        "humidity_pct": row.humidity_pct,
                        "occupancy": row.occupancy,
                        "mode": row.mode,
                        "entry_id": row.entry_id,
                    }
                )
            )
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")

    alerts_path = path.with_suffix(".alerts")
    alert_lines = [
        f"{_num(alert.timestamp)},{alert.kind.value},{alert.evidence}" for alert in report.alerts
    ]
    alerts_path.write_text("\n".join(alert_lines) + ("\n" if alert_lines else ""), encoding="utf-8")
    return [path, alerts_path]

"""Simulated device-side loop.

Each tick: sample every sensor, advance the controller, run the safety
fusion, post the mapped fields to the telemetry channel and, on display
boundaries, render the console status block.
"""

from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import requests

from .controller import (
    ControllerConfig,
    ControllerState,
    Occupancy,
    UserProfile,
    WaterMode,
    actuator_outputs,
    step,
)
from .safety import AlertKind, SafetyConfig, SafetyEngine
from .sensors import (
    EnvironmentState,
    default_ultrasonic_array,
    dht_measure,
    gesture_poll,
    round_half_up,
    sound_sample,
    ultrasonic_measure,
)

logger = logging.getLogger(__name__)

MODE_CODES = {WaterMode.OFF: 0, WaterMode.HOT: 1, WaterMode.COLD: 2, WaterMode.NORMAL: 3}
ALERT_CODES = {
    AlertKind.FALL: 1,
    AlertKind.HELP_GESTURE: 2,
    AlertKind.PROLONGED_HOT: 3,
    AlertKind.OCCUPANCY_TIMEOUT: 4,
}
MODE_PHRASES = {
    WaterMode.HOT: "hot",
    WaterMode.COLD: "cold",
    WaterMode.NORMAL: "normal temperature",
}

DEFAULT_FIELD_MAP = {
    1: "distance_cm",
    2: "temperature_c",
    3: "humidity_pct",
    4: "mode_code",
    5: "alert_code",
}


@dataclass
class AgentConfig:
    tick_s: float = 1.0
    display_every_s: float = 30.0
    write_key: str = ""
    server_url: str = ""
    field_map: dict = field(default_factory=lambda: dict(DEFAULT_FIELD_MAP))
    sound_threshold: float = 0.5
    queue_limit: int = 120

    def __post_init__(self) -> None:
        if self.tick_s <= 0:
            raise ValueError("tick_s must be positive")
        ratio = self.display_every_s / self.tick_s
        if self.display_every_s <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("display_every_s must be a positive multiple of tick_s")
        positions = list(self.field_map)
        if any(not (1 <= p <= 8) for p in positions):
            raise ValueError("field positions must lie in 1..8")
        if len(set(self.field_map.values())) != len(positions):
            raise ValueError("field map quantities must be unique")
        unknown = set(self.field_map.values()) - set(DEFAULT_FIELD_MAP.values())
        if unknown:
            raise ValueError(f"unknown field map quantities: {sorted(unknown)}")
        if self.queue_limit < 1:
            raise ValueError("queue_limit must be >= 1")


def render_status(
    distance: int, temp_c: int, humidity_pct, transport_status: str, mode: WaterMode
) -> str:
    """The console status block shown on the monitor, one item per line."""
    lines = [
        f"Distance: {distance}",
        f"Temperature: {temp_c}",
        f"Humidity: {float(humidity_pct):.1f}",
        str(transport_status),
    ]
    if mode is WaterMode.OFF:
        lines.append("Shower room empty")
    else:
        lines.extend(
            [
                "Shower Turned on",
                f"Temperature ={temp_c}",
                f"Humidity ={int(humidity_pct)}%",
                f"Turn on {MODE_PHRASES[mode]} shower",
            ]
        )
    return "\n".join(lines) + "\n"


class TelemetryClient:
    """Posts channel updates over the wire protocol."""

    def __init__(self, base_url: str, timeout_s: float = 5.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = requests.Session()

    def post_update(self, write_key: str, values: dict, created_at: float):
        """Returns (transport status line, entry id or None on transport failure)."""
        data = {"api_key": write_key, "created_at": f"{created_at:g}"}
        for position, value in values.items():
            data[f"field{position}"] = value
        try:
            response = self._session.post(
                self.base_url + "/update", data=data, timeout=self.timeout_s
            )
        except requests.RequestException:
            return "unreachable", None
        status = f"{response.status_code} {response.reason}"
        if response.status_code != 200:
            return status, None
        try:
            return status, int(response.text.strip())
        except ValueError:
            return status, None


@dataclass
class TickResult:
    time_s: float
    distance_cm: int
    temp_c: int
    humidity_pct: int
    occupancy: Occupancy
    mode: WaterMode
    entry_id: int
    payload: dict
    alerts: list
    commands: list
    console: Optional[str]
    transport_status: str
    humidity_above_threshold: bool = False  # informational flag; no control action


def _force_water_off(state: ControllerState) -> ControllerState:
    forced = replace(state, mode=WaterMode.OFF, discharge_temp=0.0)
    return replace(forced, leds=actuator_outputs(forced))


class DeviceAgent:
    """Owns the per-device state bundle and drives one tick at a time."""

    def __init__(
        self,
        cfg: AgentConfig,
        controller_cfg: Optional[ControllerConfig] = None,
        safety_cfg: Optional[SafetyConfig] = None,
        sensor_cfgs=None,
        profile: Optional[UserProfile] = None,
        seed: int = 0,
        client: Optional[TelemetryClient] = None,
    ):
        self.cfg = cfg
        self.controller_cfg = controller_cfg or ControllerConfig()
        self.safety_cfg = safety_cfg or SafetyConfig()
        self.sensors = tuple(sensor_cfgs) if sensor_cfgs is not None else default_ultrasonic_array()
        if len(self.sensors) != 3:
            raise ValueError("the agent drives exactly three ultrasonic rangers")
        self.profile = profile
        if client is not None:
            self.client = client
        elif cfg.server_url:
            self.client = TelemetryClient(cfg.server_url)
        else:
            self.client = None
        self.rng = random.Random(seed)
        self.state = ControllerState()
        self.engine = SafetyEngine(self.safety_cfg)
        self.queue = deque()
        self.water_lockout = False
        self.posts_attempted = 0
        self.posts_accepted = 0
        self.posts_dropped = 0
        self.last_status = "no transport"
        self._humidity_flag = False

    def tick(self, env: EnvironmentState, now: float) -> TickResult:
        readings = [ultrasonic_measure(env, cfg, self.rng) for cfg in self.sensors]
        dht = dht_measure(env)
        sound_bit = sound_sample(env, self.cfg.sound_threshold)
        gesture = gesture_poll(env)

        new_state, commands = step(
            self.state, [readings[0], dht], self.controller_cfg, self.profile, now
        )
        if new_state.occupancy is Occupancy.EMPTY:
            self.water_lockout = False  # episode over; lockout ends with it
        elif self.water_lockout:
            forced = _force_water_off(new_state)
            if forced == self.state:
                commands = []
            new_state = forced

        per_sensor = tuple(
            Occupancy.OCCUPIED if r.value < self.controller_cfg.activation_cm else Occupancy.EMPTY
            for r in readings
        )
        alerts, safety_commands = self.engine.fuse_tick(
            per_sensor, sound_bit, gesture, new_state, now
        )
        if "water off" in safety_commands and new_state.occupancy is Occupancy.OCCUPIED:
            self.water_lockout = True
            new_state = _force_water_off(new_state)
        commands = commands + safety_commands
        self.state = new_state

        temp_c, humidity = dht.value
        humidity_flag = humidity > self.controller_cfg.humidity_threshold_pct
        if humidity_flag != self._humidity_flag:
            logger.info(
                "humidity %d%% %s threshold %g%%",
                humidity,
                "above" if humidity_flag else "back below",
                self.controller_cfg.humidity_threshold_pct,
            )
            self._humidity_flag = humidity_flag
        distance = round_half_up(readings[0].value)
        quantities = {
            "distance_cm": distance,
            "temperature_c": temp_c,
            "humidity_pct": humidity,
            "mode_code": MODE_CODES[new_state.mode],
            "alert_code": ALERT_CODES[alerts[0].kind] if alerts else 0,
        }
        payload = {pos: quantities[name] for pos, name in sorted(self.cfg.field_map.items())}
        entry_id = self._post(payload, now)

        console = None
        if self._display_boundary(now):
            console = render_status(distance, temp_c, humidity, self.last_status, new_state.mode)

        return TickResult(
            time_s=now,
            distance_cm=distance,
            temp_c=temp_c,
            humidity_pct=humidity,
            occupancy=new_state.occupancy,
            mode=new_state.mode,
            entry_id=entry_id,
            payload=payload,
            alerts=alerts,
            commands=commands,
            console=console,
            transport_status=self.last_status,
            humidity_above_threshold=humidity_flag,
        )

    def _display_boundary(self, now: float) -> bool:
        ratio = now / self.cfg.display_every_s
        return abs(ratio - round(ratio)) < 1e-9

    def _post(self, payload: dict, now: float) -> int:
        """One post attempt per tick; unreachable payloads wait in a bounded queue."""
        if len(self.queue) >= self.cfg.queue_limit:
            self.queue.popleft()
            self.posts_dropped += 1
        self.queue.append((now, payload))
        head_time, head_payload = self.queue[0]
        self.posts_attempted += 1
        if self.client is None:
            self.last_status = "no transport"
            return 0
        status, entry_id = self.client.post_update(self.cfg.write_key, head_payload, head_time)
        self.last_status = status
        if entry_id is None:
            return 0  # transport failure: head stays queued
        self.queue.popleft()
        if entry_id > 0:
            self.posts_accepted += 1
        return entry_id if head_time == now else 0

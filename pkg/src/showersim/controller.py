"""Shower control state machine.

Occupancy classification from the proximity reading, water-mode selection
from the outdoor temperature, a hard scald ceiling on discharge
temperature, and the LED outputs that stand in for the nozzle actuators.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

from .sensors import SensorKind, SensorReading


class Occupancy(Enum):
    OCCUPIED = "occupied"
    EMPTY = "empty"


class WaterMode(Enum):
    OFF = "off"
    HOT = "hot"
    COLD = "cold"
    NORMAL = "normal"


class PreferenceMode(Enum):
    AUTO = "auto"
    FIXED = "fixed"


LED_COLORS = ("blue", "yellow", "green", "red")

# One indicator LED per running water mode.
MODE_LED = {WaterMode.COLD: "yellow", WaterMode.HOT: "green", WaterMode.NORMAL: "red"}

# Discharge setpoints used when no fixed user preference applies.
NOMINAL_DISCHARGE_C = {WaterMode.HOT: 45.0, WaterMode.COLD: 20.0, WaterMode.NORMAL: 37.0}

_PIN_RE = re.compile(r"^[0-9]{4}$")


class MissingReadingError(ValueError):
    """A control step ran without a required sensor reading."""


@dataclass(frozen=True)
class ControllerConfig:
    activation_cm: float = 60.0
    deactivation_cm: float = 60.0
    t_hot_c: float = 22.0
    t_cold_c: float = 23.0
    humidity_threshold_pct: float = 10.0  # recorded only; no control action
    max_discharge_c: float = 50.0

    def __post_init__(self) -> None:
        if self.activation_cm > self.deactivation_cm:
            raise ValueError("activation_cm must not exceed deactivation_cm")
        if self.t_hot_c > self.t_cold_c:
            raise ValueError("t_hot_c must not exceed t_cold_c")
        if self.max_discharge_c <= 0:
            raise ValueError("max_discharge_c must be positive")


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    pin: str
    preferred_temp: Optional[float] = None
    preference_mode: PreferenceMode = PreferenceMode.AUTO

    def __post_init__(self) -> None:
        if not _PIN_RE.match(self.pin):
            raise ValueError("pin must be exactly 4 decimal digits")
        if self.preference_mode is PreferenceMode.FIXED and self.preferred_temp is None:
            raise ValueError("fixed preference requires preferred_temp")


@dataclass(frozen=True)
class ControllerState:
    occupancy: Occupancy = Occupancy.EMPTY
    mode: WaterMode = WaterMode.OFF
    discharge_temp: float = 0.0
    occupied_since: Optional[float] = None
    leds: frozenset = frozenset()


def classify_occupancy(distance: float, prev: Occupancy, cfg: ControllerConfig) -> Occupancy:
    """Occupied below activation, empty at/after deactivation, else hold.

    With equal thresholds (the bench default, 60 cm) this is a single-cutoff
    rule; spreading them apart enables hysteresis.
    """
    if distance < 0:
        raise ValueError("distance must be >= 0")
    if distance < cfg.activation_cm:
        return Occupancy.OCCUPIED
    if distance >= cfg.deactivation_cm:
        return Occupancy.EMPTY
    return prev


def select_water_mode(
    temp_c: float, cfg: ControllerConfig, profile: Optional[UserProfile] = None
) -> WaterMode:
    """Pick the discharge mode opposite to the outdoor temperature."""
    if profile is not None and profile.preference_mode is PreferenceMode.FIXED:
        return WaterMode.NORMAL
    if temp_c < cfg.t_hot_c:
        return WaterMode.HOT
    if temp_c >= cfg.t_cold_c:
        return WaterMode.COLD
    return WaterMode.NORMAL


def clamp_discharge_temperature(requested: float, cfg: ControllerConfig) -> float:
    """Cap the requested discharge temperature at the scald ceiling."""
    if not math.isfinite(requested):
        raise ValueError("requested temperature must be finite")
    return min(float(requested), cfg.max_discharge_c)


def actuator_outputs(state: ControllerState) -> frozenset:
    """Blue while occupied plus exactly one mode LED while water runs."""
    leds = set()
    if state.occupancy is Occupancy.OCCUPIED:
        leds.add("blue")
    mode_led = MODE_LED.get(state.mode)
    if mode_led is not None:
        leds.add(mode_led)
    return frozenset(leds)


def step(
    state: ControllerState,
    readings: Iterable[SensorReading],
    cfg: ControllerConfig,
    profile: Optional[UserProfile] = None,
    now: float = 0.0,
) -> tuple[ControllerState, list[str]]:
    """Advance the state machine one tick from the latest readings.

    Commands (mode and LED changes) are emitted only when the corresponding
    piece of state actually changed, so an unchanged state produces none.
    """
    ultrasonic = None
    dht = None
    for reading in readings:
        if reading.kind is SensorKind.ULTRASONIC and ultrasonic is None:
            ultrasonic = reading
        elif reading.kind is SensorKind.TEMP_HUMIDITY and dht is None:
            dht = reading
    if ultrasonic is None:
        raise MissingReadingError("missing ultrasonic reading")
    if dht is None:
        raise MissingReadingError("missing temp_humidity reading")
    temp_c, _humidity = dht.value

    occupancy = classify_occupancy(ultrasonic.value, state.occupancy, cfg)
    if occupancy is Occupancy.OCCUPIED:
        mode = select_water_mode(temp_c, cfg, profile)
        if profile is not None and profile.preference_mode is PreferenceMode.FIXED:
            discharge = clamp_discharge_temperature(profile.preferred_temp, cfg)
        else:
            discharge = clamp_discharge_temperature(NOMINAL_DISCHARGE_C[mode], cfg)
        occupied_since = state.occupied_since if state.occupancy is Occupancy.OCCUPIED else now
    else:
        mode = WaterMode.OFF
        discharge = 0.0
        occupied_since = None

    new_state = ControllerState(occupancy, mode, discharge, occupied_since)
    new_state = replace(new_state, leds=actuator_outputs(new_state))

    commands: list[str] = []
    if mode is not state.mode:
        commands.append("water off" if mode is WaterMode.OFF else f"mode {mode.value}")
    for color in LED_COLORS:
        before = color in state.leds
        after = color in new_state.leds
        if after != before:
            commands.append(f"led {color} {'on' if after else 'off'}")
    return new_state, commands

"""Danger detection for the shower space.

Three detection scenarios plus an occupancy timer: a fall signature from
the three-ranger geometry confirmed by a sound spike, a help gesture, a
prolonged hot-water discharge, and an open-ended occupancy episode.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .controller import ControllerState, Occupancy, WaterMode
from .sensors import GestureCode


class AlertKind(Enum):
    FALL = "fall"
    HELP_GESTURE = "help_gesture"
    PROLONGED_HOT = "prolonged_hot"
    OCCUPANCY_TIMEOUT = "occupancy_timeout"


class GestureMeaning(Enum):
    HELP = "help"
    OKAY = "okay"
    NONE = "none"


# Right or a wave calls for help; left signals the patron is okay.
GESTURE_MEANINGS = {
    GestureCode.RIGHT: GestureMeaning.HELP,
    GestureCode.WAVE: GestureMeaning.HELP,
    GestureCode.LEFT: GestureMeaning.OKAY,
}


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    timestamp: float
    evidence: str


@dataclass(frozen=True)
class SafetyConfig:
    occupancy_alert_s: float = 1800.0
    prolonged_hot_s: float = 1200.0
    thud_window_samples: int = 10
    thud_min_ones: int = 3
    geometry_confirm_ticks: int = 2
    require_thud: bool = True  # False: confirmed geometry alone raises a fall

    def __post_init__(self) -> None:
        for name in (
            "occupancy_alert_s",
            "prolonged_hot_s",
            "thud_window_samples",
            "thud_min_ones",
            "geometry_confirm_ticks",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def detect_fall_geometry(us1: Occupancy, us2: Occupancy, us3: Occupancy) -> bool:
    """Fall signature: high and mid beams clear, floor beam blocked."""
    return (
        us1 is Occupancy.EMPTY
        and us2 is Occupancy.EMPTY
        and us3 is Occupancy.OCCUPIED
    )


def detect_thud(samples: Sequence[int], cfg: SafetyConfig) -> bool:
    """True when the window holds a spike: enough loud samples after silence.

    Sound that is loud for the entire window has no leading quiet sample and
    is treated as sustained noise, not a thud.
    """
    samples = list(samples)
    if len(samples) != cfg.thud_window_samples:
        raise ValueError(
            f"expected a window of {cfg.thud_window_samples} samples, got {len(samples)}"
        )
    try:
        first_quiet = samples.index(0)
    except ValueError:
        return False
    return sum(samples[first_quiet + 1 :]) >= cfg.thud_min_ones


def interpret_gesture(gesture: GestureCode) -> GestureMeaning:
    return GESTURE_MEANINGS.get(gesture, GestureMeaning.NONE)


def check_prolonged_hot(
    mode_history: Sequence[tuple[float, WaterMode]], now: float, cfg: SafetyConfig
) -> Optional[Alert]:
    """Alert when the current contiguous hot segment has run long enough.

    Any interruption (a different mode between hot entries) resets the clock.
    """
    if not mode_history or mode_history[-1][1] is not WaterMode.HOT:
        return None
    start = None
    for timestamp, mode in reversed(mode_history):
        if mode is not WaterMode.HOT:
            break
        start = timestamp
    duration = now - start
    if duration >= cfg.prolonged_hot_s:
        return Alert(AlertKind.PROLONGED_HOT, now, f"hot water running for {duration:g} s")
    return None


def check_occupancy_timeout(
    occupied_since: Optional[float], now: float, cfg: SafetyConfig
) -> Optional[Alert]:
    if occupied_since is None:
        return None
    duration = now - occupied_since
    if duration >= cfg.occupancy_alert_s:
        return Alert(
            AlertKind.OCCUPANCY_TIMEOUT, now, f"shower occupied for {duration:g} s"
        )
    return None


class SafetyEngine:
    """Fuses the per-tick sensor picture into alerts.

    Owns the episode record: each alert kind fires at most once per occupancy
    episode, where an episode opens when a patron enters and the record is
    re-armed only by the next entry. The sound window and geometry streak are
    physical signals and carry across episode boundaries.
    """

    def __init__(self, cfg: SafetyConfig):
        self.cfg = cfg
        self._sound_window = deque(
            [0] * cfg.thud_window_samples, maxlen=cfg.thud_window_samples
        )
        self._geometry_streak = 0
        self._last_thud_tick: Optional[int] = None
        self._tick = -1
        self._fired: set[AlertKind] = set()
        self._help_pending = False
        self._mode_history: list[tuple[float, WaterMode]] = []
        self._prev_occupancy = Occupancy.EMPTY

    @property
    def help_pending(self) -> bool:
        return self._help_pending

    def fuse_tick(
        self,
        sensor_occupancy: tuple[Occupancy, Occupancy, Occupancy],
        sound_bit: int,
        gesture: Optional[GestureCode],
        controller_state: ControllerState,
        now: float,
    ) -> tuple[list[Alert], list[str]]:
        """One fusion pass; returns (alerts, actuator commands)."""
        self._tick += 1
        alerts: list[Alert] = []
        commands: list[str] = []

        if (
            controller_state.occupancy is Occupancy.OCCUPIED
            and self._prev_occupancy is Occupancy.EMPTY
        ):
            self._fired.clear()
            self._help_pending = False
        self._prev_occupancy = controller_state.occupancy

        if not self._mode_history or self._mode_history[-1][1] is not controller_state.mode:
            self._mode_history.append((now, controller_state.mode))

        self._sound_window.append(1 if sound_bit else 0)
        if detect_thud(self._sound_window, self.cfg):
            self._last_thud_tick = self._tick

        us1, us2, us3 = sensor_occupancy
        if detect_fall_geometry(us1, us2, us3):
            self._geometry_streak += 1
        else:
            self._geometry_streak = 0

        confirm = self.cfg.geometry_confirm_ticks
        thud_recent = (
            self._last_thud_tick is not None
            and self._tick - self._last_thud_tick <= confirm
        )
        if self._geometry_streak >= confirm and (thud_recent or not self.cfg.require_thud):
            evidence = f"sensors 1-2 clear with sensor-3 obstacle for {self._geometry_streak} ticks"
            if self.cfg.require_thud:
                evidence += f"; thud within the last {confirm} ticks"
            self._emit(alerts, AlertKind.FALL, now, evidence)

        meaning = interpret_gesture(gesture) if gesture is not None else GestureMeaning.NONE
        if meaning is GestureMeaning.HELP:
            if self._emit(alerts, AlertKind.HELP_GESTURE, now, f"gesture {gesture.value}"):
                self._help_pending = True
        elif meaning is GestureMeaning.OKAY and self._help_pending:
            self._help_pending = False
            commands.append("clear help")

        if AlertKind.PROLONGED_HOT not in self._fired:
            alert = check_prolonged_hot(self._mode_history, now, self.cfg)
            if alert is not None:
                alerts.append(alert)
                self._fired.add(AlertKind.PROLONGED_HOT)
                commands.append("water off")

        if AlertKind.OCCUPANCY_TIMEOUT not in self._fired:
            alert = check_occupancy_timeout(controller_state.occupied_since, now, self.cfg)
            if alert is not None:
                alerts.append(alert)
                self._fired.add(AlertKind.OCCUPANCY_TIMEOUT)

        return alerts, commands

    def _emit(self, alerts: list[Alert], kind: AlertKind, now: float, evidence: str) -> bool:
        if kind in self._fired:
            return False
        self._fired.add(kind)
        alerts.append(Alert(kind, now, evidence))
        return True

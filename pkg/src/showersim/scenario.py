"""Line-oriented scenario scripts.

One event per line: `at <seconds> <kind> <key>=<value>...`, with `#`
starting a comment. Person events carry an action word first:
`person enter distance=140`, `person move distance=6`, `person fall`,
`person leave`. Every script finishes with a single `end` event.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .sensors import EnvironmentState, GestureCode, PersonPose

EVENT_KINDS = ("env", "person", "gesture", "sound", "end")
PERSON_ACTIONS = ("enter", "move", "fall", "leave")

_PARAM_SPECS = {
    "env": {"temp": float, "humidity": float},
    "gesture": {"code": str},
    "sound": {"intensity": float},
    "end": {},
}


class ScenarioError(Exception):
    pass


class ScenarioParseError(ScenarioError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ScenarioValidationError(ScenarioError):
    pass


@dataclass(frozen=True)
class ScenarioEvent:
    at: float
    kind: str
    action: Optional[str] = None  # person events only
    params: tuple = ()  # ordered (key, value) pairs


def parse_scenario(text: str) -> list:
    """Parse a script into time-ordered events; raises on the first bad line."""
    events = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "at" or len(tokens) < 3:
            raise ScenarioParseError("expected 'at <seconds> <kind> ...'", line_no)
        try:
            at = float(tokens[1])
        except ValueError:
            raise ScenarioParseError(f"bad timestamp {tokens[1]!r}", line_no) from None
        if at < 0:
            raise ScenarioParseError("timestamps must be >= 0", line_no)
        kind = tokens[2]
        if kind not in EVENT_KINDS:
            raise ScenarioParseError(f"unknown event kind {kind!r}", line_no)
        rest = tokens[3:]
        action = None
        if kind == "person":
            if not rest or rest[0] not in PERSON_ACTIONS:
                raise ScenarioParseError(
                    "person event needs an action: enter, move, fall or leave", line_no
                )
            action = rest[0]
            rest = rest[1:]
        event = _build_event(at, kind, action, rest, line_no)
        if events and event.at < events[-1].at:
            raise ScenarioValidationError(
                f"line {line_no}: time goes backward "
                f"({event.at:g} after {events[-1].at:g})"
            )
        events.append(event)
    _validate_shape(events)
    return events


def _build_event(at, kind, action, tokens, line_no) -> ScenarioEvent:
    if kind == "person":
        spec = {"distance": float} if action in ("enter", "move") else {}
    else:
        spec = _PARAM_SPECS[kind]

    params = []
    seen = set()
    for token in tokens:
        if "=" not in token:
            raise ScenarioParseError(f"expected key=value, got {token!r}", line_no)
        key, raw = token.split("=", 1)
        if key not in spec:
            raise ScenarioParseError(f"unexpected parameter {key!r} for {kind}", line_no)
        if key in seen:
            raise ScenarioParseError(f"duplicate parameter {key!r}", line_no)
        seen.add(key)
        if spec[key] is float:
            try:
                value = float(raw)
            except ValueError:
                raise ScenarioParseError(f"{key} must be numeric, got {raw!r}", line_no) from None
        else:
            value = raw
        params.append((key, value))

    missing = set(spec) - seen
    if kind == "env":
        if not seen:
            raise ScenarioParseError("env event needs temp= and/or humidity=", line_no)
    elif missing:
        raise ScenarioParseError(f"missing parameter(s): {', '.join(sorted(missing))}", line_no)

    lookup = dict(params)
    if kind == "gesture":
        try:
            GestureCode.parse(lookup["code"])
        except ValueError as exc:
            raise ScenarioParseError(str(exc), line_no) from None
    if kind == "sound" and not 0.0 <= lookup["intensity"] <= 1.0:
        raise ScenarioParseError("intensity must lie in [0, 1]", line_no)
    if "distance" in lookup and not 0.0 <= lookup["distance"] <= 600.0:
        raise ScenarioParseError("distance must lie in [0, 600]", line_no)
    if "humidity" in lookup and not 0.0 <= lookup["humidity"] <= 100.0:
        raise ScenarioParseError("humidity must lie in [0, 100]", line_no)

    return ScenarioEvent(at, kind, action, tuple(params))


def _validate_shape(events: list) -> None:
    ends = [i for i, e in enumerate(events) if e.kind == "end"]
    if not ends:
        raise ScenarioValidationError("scenario is missing an end event")
    if len(ends) > 1:
        raise ScenarioValidationError("scenario has multiple end events")
    if ends[0] != len(events) - 1:
        raise ScenarioValidationError("the end event must be the last event")


def format_event(event: ScenarioEvent) -> str:
    parts = [f"at {event.at:g}", event.kind]
    if event.action is not None:
        parts.append(event.action)
    for key, value in event.params:
        rendered = f"{value:g}" if isinstance(value, float) else str(value)
        parts.append(f"{key}={rendered}")
    return " ".join(parts)


def format_scenario(events) -> str:
    return "\n".join(format_event(e) for e in events) + "\n"


def apply_event(env: EnvironmentState, event: ScenarioEvent) -> None:
    """Mutate the ground-truth environment according to one event."""
    params = dict(event.params)
    if event.kind == "env":
        if "temp" in params:
            env.ambient_temp = params["temp"]
        if "humidity" in params:
            env.ambient_humidity = params["humidity"]
    elif event.kind == "sound":
        env.sound_intensity = params["intensity"]
    elif event.kind == "gesture":
        env.pending_gesture = GestureCode.parse(params["code"])
    elif event.kind == "person":
        _apply_person(env, event.action, params)
    env.validate()


def _apply_person(env: EnvironmentState, action: str, params: dict) -> None:
    if action == "enter":
        if env.person_pose is not PersonPose.ABSENT:
            raise ScenarioValidationError("person enter while someone is already present")
        env.person_pose = PersonPose.STANDING
        env.person_distance = params["distance"]
    elif action == "move":
        if env.person_pose is PersonPose.ABSENT:
            raise ScenarioValidationError("person move while nobody is present")
        env.person_distance = params["distance"]
    elif action == "fall":
        if env.person_pose is not PersonPose.STANDING:
            raise ScenarioValidationError("person fall requires a standing person")
        env.person_pose = PersonPose.FALLEN
    elif action == "leave":
        if env.person_pose is PersonPose.ABSENT:
            raise ScenarioValidationError("person leave while nobody is present")
        env.person_pose = PersonPose.ABSENT
        env.person_distance = None

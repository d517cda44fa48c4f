from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from showersim.scenario import (
    ScenarioParseError,
    ScenarioValidationError,
    format_scenario,
    parse_scenario,
)


class TestParse:
    def test_three_events(self):
        events = parse_scenario(
            "at 0 env temp=25 humidity=15\nat 5 person enter distance=140\nat 10 end\n"
        )
        assert len(events) == 3
        assert events[0].kind == "env"
        assert dict(events[0].params) == {"temp": 25.0, "humidity": 15.0}
        assert events[1].action == "enter"
        assert events[2].kind == "end"

    def test_malformed_value_reports_line(self):
        with pytest.raises(ScenarioParseError, match="line 1"):
            parse_scenario("at 5 env temp=abc\nat 10 end\n")

    def test_time_going_backward_rejected(self):
        with pytest.raises(ScenarioValidationError, match="backward"):
            parse_scenario("at 10 person enter distance=50\nat 5 end\n")

    def test_missing_end_rejected(self):
        with pytest.raises(ScenarioValidationError, match="end"):
            parse_scenario("at 0 env temp=25\n")

    def test_end_must_be_last(self):
        with pytest.raises(ScenarioValidationError):
            parse_scenario("at 0 end\nat 1 env temp=20\n")

    def test_multiple_ends_rejected(self):
        with pytest.raises(ScenarioValidationError):
            parse_scenario("at 0 end\nat 1 end\n")

    def test_comments_and_blanks_skipped(self):
        events = parse_scenario("# header\n\nat 0 env temp=25  # inline\n\nat 5 end\n")
        assert len(events) == 2

    def test_unknown_kind_rejected(self):
        with pytest.raises(ScenarioParseError, match="line 1"):
            parse_scenario("at 0 teleport x=1\nat 5 end\n")

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at 0 env pressure=5\nat 5 end\n")

    def test_person_requires_action(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at 0 person distance=50\nat 5 end\n")

    def test_bad_gesture_code_rejected(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at 0 gesture code=shake\nat 5 end\n")

    def test_sound_intensity_bounds(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at 0 sound intensity=1.5\nat 5 end\n")

    def test_negative_time_rejected(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("at -1 env temp=20\nat 5 end\n")


@st.composite
def scenario_events_text(draw):
    """Well-formed scripts out of nice round numbers."""
    lines = []
    t = 0
    present = False
    n = draw(st.integers(min_value=0, max_value=12))
    for _ in range(n):
        t += draw(st.integers(min_value=0, max_value=30))
        choice = draw(st.sampled_from(["env", "sound", "gesture", "person"]))
        if choice == "env":
            temp = draw(st.integers(min_value=-10, max_value=45))
            humidity = draw(st.integers(min_value=0, max_value=100))
            lines.append(f"at {t} env temp={temp} humidity={humidity}")
        elif choice == "sound":
            intensity = draw(st.sampled_from(["0", "0.25", "0.5", "0.75", "1"]))
            lines.append(f"at {t} sound intensity={intensity}")
        elif choice == "gesture":
            code = draw(st.sampled_from(["up", "down", "left", "right", "wave"]))
            lines.append(f"at {t} gesture code={code}")
        else:
            if present:
                action = draw(st.sampled_from(["move", "leave"]))
                if action == "move":
                    d = draw(st.integers(min_value=0, max_value=600))
                    lines.append(f"at {t} person move distance={d}")
                else:
                    lines.append(f"at {t} person leave")
                    present = False
            else:
                d = draw(st.integers(min_value=0, max_value=600))
                lines.append(f"at {t} person enter distance={d}")
                present = True
    t += draw(st.integers(min_value=0, max_value=30))
    lines.append(f"at {t} end")
    return "\n".join(lines) + "\n"


class TestRoundTrip:
    @given(text=scenario_events_text())
    def test_format_then_reparse_is_identity(self, text):
        events = parse_scenario(text)
        assert parse_scenario(format_scenario(events)) == events

    def test_hand_example(self):
        text = "at 0 env temp=25 humidity=15\nat 5 person enter distance=140\nat 10 end\n"
        events = parse_scenario(text)
        assert format_scenario(events) == text

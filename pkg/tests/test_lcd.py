import pytest
from hypothesis import given, strategies as st

from pillsim.domain import DoseInstance, DoseSlot, Schedule, SlotId, walltime
from pillsim.lcd import LcdFrame, fit16, render_alarm, render_idle
from pillsim.scheduler import NextDue, next_due


def make_next(dose, due):
    return NextDue(DoseInstance(due.date(), dose.slot, due), dose, 0)


PARA = DoseSlot(SlotId.MORNING, 8 * 60, 1, "PARACETAMOL", 2)


class TestFit16:
    def test_empty(self):
        assert fit16("") == " " * 16

    def test_pads(self):
        assert fit16("PARACETAMOL x2") == "PARACETAMOL x2  "

    def test_truncates(self):
        assert fit16("ABCDEFGHIJKLMNOPQRST") == "ABCDEFGHIJKLMNOP"


class TestRenderIdle:
    def test_golden_countdown_frame(self):
        frame = render_idle(walltime(2017, 3, 1, 7, 59, 0), make_next(PARA, walltime(2017, 3, 1, 8, 0, 0)))
        assert frame.rows == (
            "TIME 07:59:00   ",
            "NEXT 08:00 MORN ",
            "PARACETAMOL x2  ",
            "                ",
        )

    def test_no_doses_set(self):
        frame = render_idle(walltime(2017, 3, 1, 7, 59, 0), None)
        assert frame.rows[1] == "NO DOSES SET    "
        assert frame.rows[2] == " " * 16

    def test_evening_slot_code_is_four_chars(self):
        dose = DoseSlot(SlotId.EVENING, 20 * 60, 3, "ATORVASTATIN", 1)
        frame = render_idle(walltime(2017, 3, 1, 12, 0, 0), make_next(dose, walltime(2017, 3, 1, 20, 0, 0)))
        assert frame.rows[1] == "NEXT 20:00 EVEN "

    def test_pure_function_of_inputs(self):
        now = walltime(2017, 3, 1, 7, 59, 0)
        nxt = make_next(PARA, walltime(2017, 3, 1, 8, 0, 0))
        assert render_idle(now, nxt) == render_idle(now, nxt)


class TestRenderAlarm:
    def test_golden_ringing_frame(self):
        frame = render_alarm(PARA, "RING1")
        assert frame.rows == (
            "TAKE BOX 1      ",
            "PARACETAMOL x2  ",
            "RINGING         ",
            "                ",
        )

    def test_stage_words(self):
        assert render_alarm(PARA, "RING2").rows[2] == "RINGING         "
        assert render_alarm(PARA, "SNOOZED").rows[2] == "SNOOZED         "
        assert render_alarm(PARA, "WAIT_PATIENT").rows[2] == "SMS SENT        "
        assert render_alarm(PARA, "WAIT_FAMILY").rows[2] == "SMS SENT        "

    def test_idle_has_no_alarm_screen(self):
        with pytest.raises(ValueError):
            render_alarm(PARA, "IDLE")


class TestFrameInvariants:
    def test_bad_row_length_rejected(self):
        with pytest.raises(ValueError):
            LcdFrame(("short", " " * 16, " " * 16, " " * 16))

    def test_nonprintable_rejected(self):
        with pytest.raises(ValueError):
            LcdFrame(("\x07" + " " * 15, " " * 16, " " * 16, " " * 16))


printable_text = st.text(
    alphabet=st.characters(min_codepoint=32, max_codepoint=126), min_size=1, max_size=16
)


@given(
    printable_text,
    st.integers(1, 99),
    st.sampled_from(list(SlotId)),
    st.integers(0, 1439),
    st.integers(1, 3),
    st.integers(0, 86399),
)
def test_rendering_always_yields_4x16_printable(pill, count, slot, tod, box, second_of_day):
    now = walltime(2017, 3, 1) .replace(
        hour=second_of_day // 3600, minute=second_of_day % 3600 // 60, second=second_of_day % 60
    )
    dose = DoseSlot(slot, tod, box, pill, count)
    idle = render_idle(now, make_next(dose, now))
    for stage in ("RING1", "SNOOZED", "RING2", "WAIT_PATIENT", "WAIT_FAMILY"):
        alarm = render_alarm(dose, stage)
        assert len(alarm.rows) == 4
        assert all(len(r) == 16 for r in alarm.rows)
    assert len(idle.rows) == 4
    assert all(len(r) == 16 for r in idle.rows)


def test_idle_frame_shows_next_medicine_from_schedule():
    s = Schedule((PARA,))
    now = walltime(2017, 3, 1, 7, 59, 0)
    frame = render_idle(now, next_due(s, now))
    assert frame.rows[1] == "NEXT 08:00 MORN "
    assert frame.rows[2] == "PARACETAMOL x2  "

"""4-row by 16-column character frames mirroring the device's LCD."""

from __future__ import annotations

from dataclasses import dataclass

from .domain import DoseSlot, WallTime, is_printable
from .scheduler import NextDue

ROWS = 4
COLS = 16

BLANK_ROW = " " * COLS


@dataclass(frozen=True)
class LcdFrame:
    """Exactly four 16-character rows of printable ASCII."""

    rows: tuple[str, str, str, str]

    def __post_init__(self):
        if len(self.rows) != ROWS:
            raise ValueError(f"frame needs {ROWS} rows")
        for r in self.rows:
            if len(r) != COLS or not is_printable(r):
                raise ValueError(f"bad LCD row: {r!r}")

    def as_text(self) -> str:
        return "\n".join(self.rows)


def fit16(text: str) -> str:
    """Left-align into 16 columns: space-padded, hard-truncated."""
    return text[:COLS].ljust(COLS)


def render_idle(now: WallTime, next_dose: NextDue | None) -> LcdFrame:
    """The countdown screen shown between alarms."""
    row0 = fit16(f"TIME {now.strftime('%H:%M:%S')}")
    if next_dose is None:
        row1 = fit16("NO DOSES SET")
        row2 = BLANK_ROW
    else:
        dose = next_dose.dose
        hhmm = f"{dose.time_of_day // 60:02d}:{dose.time_of_day % 60:02d}"
        row1 = fit16(f"NEXT {hhmm} {dose.slot.display_code}")
        row2 = fit16(f"{dose.pill_name} x{dose.pill_count}")
    return LcdFrame((row0, row1, row2, BLANK_ROW))


_STAGE_WORDS = {
    "RING1": "RINGING",
    "RING2": "RINGING",
    "SNOOZED": "SNOOZED",
    "WAIT_PATIENT": "SMS SENT",
    "WAIT_FAMILY": "SMS SENT",
}


def render_alarm(dose: DoseSlot, stage_name: str) -> LcdFrame:
    """The take-your-pill screen shown while an alarm is active."""
    if stage_name not in _STAGE_WORDS:
        raise ValueError(f"no alarm screen for stage {stage_name!r}")
    return LcdFrame((
        fit16(f"TAKE BOX {dose.compartment}"),
        fit16(f"{dose.pill_name} x{dose.pill_count}"),
        fit16(_STAGE_WORDS[stage_name]),
        BLANK_ROW,
    ))

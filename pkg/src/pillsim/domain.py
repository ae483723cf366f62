"""Core domain types: compartments, dose slots, schedules, escalation policy.

Wall time is a naive ``datetime`` at one-second resolution throughout; the
device has no timezone concept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, time
from enum import Enum

WallTime = datetime

COMPARTMENTS = (1, 2, 3)

MAX_PILL_NAME = 16
MAX_PATIENT_NAME = 24

_PHONE_RE = re.compile(r"^\+\d{8,15}$")


def is_printable(text: str) -> bool:
    """True if every character is printable 7-bit ASCII (LCD-renderable)."""
    return all(32 <= ord(c) <= 126 for c in text)


def walltime(year: int, month: int, day: int, hour: int = 0, minute: int = 0, second: int = 0) -> WallTime:
    return datetime(year, month, day, hour, minute, second)


def parse_walltime(text: str) -> WallTime:
    """Parse local ISO-8601 wall time, e.g. ``2017-03-01T08:00:00``."""
    t = datetime.fromisoformat(text)
    if t.tzinfo is not None:
        raise ValueError(f"wall time must be naive local time: {text!r}")
    if t.microsecond:
        raise ValueError(f"wall time has second resolution: {text!r}")
    return t


def format_walltime(t: WallTime) -> str:
    return t.strftime("%Y-%m-%dT%H:%M:%S")


class SlotId(Enum):
    """The three daily intake slots, ordered morning to evening."""

    MORNING = 0
    NOON = 1
    EVENING = 2

    @property
    def order(self) -> int:
        return self.value

    @property
    def display_code(self) -> str:
        """Four-character code used on the 16-column LCD."""
        return self.name[:4]

    def __lt__(self, other: "SlotId") -> bool:
        return self.value < other.value


@dataclass(frozen=True)
class DoseSlot:
    """One daily intake: a slot bound to a compartment and its pills."""

    slot: SlotId
    time_of_day: int  # minutes from midnight, 0..1439
    compartment: int
    pill_name: str
    pill_count: int = 1

    def due_time(self) -> time:
        return time(self.time_of_day // 60, self.time_of_day % 60)


@dataclass(frozen=True)
class Schedule:
    """Up to three dose slots; at most one per SlotId and per compartment."""

    slots: tuple[DoseSlot, ...] = ()

    def dose_for(self, slot: SlotId) -> DoseSlot | None:
        for d in self.slots:
            if d.slot is slot:
                return d
        return None

    def with_slot(self, dose: DoseSlot) -> "Schedule":
        """Return a schedule with ``dose`` added, replacing its SlotId if present."""
        kept = tuple(d for d in self.slots if d.slot is not dose.slot)
        ordered = tuple(sorted(kept + (dose,), key=lambda d: d.slot.order))
        return Schedule(ordered)


@dataclass(frozen=True)
class EscalationPolicy:
    """Stage durations, retry counts and phone numbers for missed-dose handling.

    The paper leaves the stage durations unspecified; the defaults below are
    this artifact's convention (one-minute rings, five-minute waits).
    """

    ring_s: int = 60
    snooze_s: int = 300
    wait_patient_s: int = 300
    wait_family_s: int = 300
    sms_retries: int = 2
    patient_number: str = "+911234567890"
    family_number: str = "+919876543210"
    patient_name: str = "PATIENT"


@dataclass(frozen=True)
class DoseInstance:
    """A concrete occurrence of a dose slot on a calendar date."""

    date: date
    slot: SlotId
    due_at: WallTime


@dataclass(frozen=True)
class Violation:
    """One violated invariant, with a machine-readable code."""

    code: str
    message: str


def _check_dose_fields(d: DoseSlot) -> list[Violation]:
    out = []
    if not isinstance(d.time_of_day, int) or not 0 <= d.time_of_day <= 1439:
        out.append(Violation("BAD_TIME", f"{d.slot.name}: time_of_day {d.time_of_day!r} outside 0..1439"))
    if d.compartment not in COMPARTMENTS:
        out.append(Violation("BAD_COMPARTMENT", f"{d.slot.name}: compartment {d.compartment!r} outside 1..3"))
    if not (1 <= len(d.pill_name) <= MAX_PILL_NAME and is_printable(d.pill_name)):
        out.append(Violation("BAD_PILL_NAME", f"{d.slot.name}: pill name must be 1..16 printable characters"))
    if not isinstance(d.pill_count, int) or d.pill_count < 1:
        out.append(Violation("BAD_PILL_COUNT", f"{d.slot.name}: pill count must be >= 1"))
    return out


def validate_schedule(s: Schedule) -> list[Violation]:
    """Return every violated invariant; an empty list means the schedule is valid."""
    out: list[Violation] = []
    for d in s.slots:
        out.extend(_check_dose_fields(d))

    seen_slots: dict[SlotId, DoseSlot] = {}
    seen_boxes: dict[int, DoseSlot] = {}
    seen_times: dict[int, DoseSlot] = {}
    for d in s.slots:
        if d.slot in seen_slots:
            out.append(Violation("DUPLICATE_SLOT", f"more than one entry for {d.slot.name}"))
        seen_slots.setdefault(d.slot, d)
        if d.compartment in seen_boxes and d.compartment in COMPARTMENTS:
            out.append(Violation("DUPLICATE_COMPARTMENT", f"compartment {d.compartment} bound twice"))
        seen_boxes.setdefault(d.compartment, d)
        if d.time_of_day in seen_times:
            out.append(Violation("DUPLICATE_TIME", f"two slots share time {d.time_of_day // 60:02d}:{d.time_of_day % 60:02d}"))
        seen_times.setdefault(d.time_of_day, d)

    ordered = sorted(seen_slots, key=lambda sl: sl.order)
    for earlier, later in zip(ordered, ordered[1:]):
        if seen_slots[earlier].time_of_day >= seen_slots[later].time_of_day:
            out.append(Violation("SLOT_ORDER", f"{earlier.name} time must be earlier than {later.name}"))
    return out


def validate_policy(p: EscalationPolicy) -> list[Violation]:
    """Return every violated policy invariant; empty list means valid."""
    out = []
    for name in ("ring_s", "snooze_s", "wait_patient_s", "wait_family_s"):
        v = getattr(p, name)
        if not isinstance(v, int) or v <= 0:
            out.append(Violation("BAD_DURATION", f"{name} must be a positive number of seconds"))
    if not isinstance(p.sms_retries, int) or p.sms_retries < 0:
        out.append(Violation("BAD_RETRIES", "sms_retries must be >= 0"))
    for name in ("patient_number", "family_number"):
        if not _PHONE_RE.match(getattr(p, name)):
            out.append(Violation("BAD_PHONE", f"{name} must be '+' followed by 8..15 digits"))
    if not (1 <= len(p.patient_name) <= MAX_PATIENT_NAME and is_printable(p.patient_name)):
        out.append(Violation("BAD_NAME", "patient_name must be 1..24 printable characters"))
    return out


def policy_total_window(p: EscalationPolicy) -> int:
    """Seconds from dose-due to MISSED when nobody interacts.

    The alarm rings, snoozes, rings again, then waits out both SMS stages.
    """
    return p.ring_s + p.snooze_s + p.ring_s + p.wait_patient_s + p.wait_family_s


# --- configuration file -----------------------------------------------------
#
# UTF-8 key/value lines, '#' starts a comment, unknown keys are errors:
#
#   slot.MORNING.time = 08:00
#   slot.MORNING.box = 1
#   slot.MORNING.pill = PARACETAMOL
#   slot.MORNING.count = 2
#   policy.ring_s = 60
#   policy.patient_number = +919876543210

_POLICY_INT_KEYS = ("ring_s", "snooze_s", "wait_patient_s", "wait_family_s", "sms_retries")
_POLICY_STR_KEYS = ("patient_number", "family_number", "patient_name")


@dataclass(frozen=True)
class ConfigError:
    line: int
    message: str


@dataclass(frozen=True)
class ConfigResult:
    schedule: Schedule
    policy: EscalationPolicy
    errors: tuple[ConfigError, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def parse_hhmm(text: str) -> int:
    """Parse ``HH:MM`` into minutes from midnight."""
    m = re.match(r"^(\d{2}):(\d{2})$", text)
    if not m:
        raise ValueError(f"expected HH:MM, got {text!r}")
    hh, mm = int(m.group(1)), int(m.group(2))
    if hh > 23 or mm > 59:
        raise ValueError(f"time of day out of range: {text!r}")
    return hh * 60 + mm


def parse_config(text: str) -> ConfigResult:
    """Parse a schedule/policy configuration document."""
    errors: list[ConfigError] = []
    slot_raw: dict[SlotId, dict[str, str]] = {}
    policy_kwargs: dict[str, object] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(ConfigError(lineno, f"expected 'key = value', got {line!r}"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))

        if key.startswith("slot."):
            parts = key.split(".")
            if len(parts) != 3:
                errors.append(ConfigError(lineno, f"unknown key {key!r}"))
                continue
            _, slot_name, attr = parts
            try:
                slot = SlotId[slot_name.upper()]
            except KeyError:
                errors.append(ConfigError(lineno, f"unknown slot {slot_name!r}"))
                continue
            if attr not in ("time", "box", "pill", "count"):
                errors.append(ConfigError(lineno, f"unknown key {key!r}"))
                continue
            slot_raw.setdefault(slot, {})[attr] = value
        elif key.startswith("policy."):
            attr = key[len("policy."):]
            if attr in _POLICY_INT_KEYS:
                try:
                    policy_kwargs[attr] = int(value)
                except ValueError:
                    errors.append(ConfigError(lineno, f"{key} must be an integer, got {value!r}"))
            elif attr in _POLICY_STR_KEYS:
                policy_kwargs[attr] = value
            else:
                errors.append(ConfigError(lineno, f"unknown key {key!r}"))
        else:
            errors.append(ConfigError(lineno, f"unknown key {key!r}"))

    slots = []
    for slot in sorted(slot_raw, key=lambda sl: sl.order):
        raw_attrs = slot_raw[slot]
        missing = [a for a in ("time", "box", "pill") if a not in raw_attrs]
        if missing:
            errors.append(ConfigError(0, f"slot.{slot.name} missing {', '.join(missing)}"))
            continue
        try:
            tod = parse_hhmm(raw_attrs["time"])
        except ValueError as e:
            errors.append(ConfigError(0, f"slot.{slot.name}.time: {e}"))
            continue
        try:
            box = int(raw_attrs["box"])
            count = int(raw_attrs.get("count", "1"))
        except ValueError:
            errors.append(ConfigError(0, f"slot.{slot.name}: box and count must be integers"))
            continue
        slots.append(DoseSlot(slot, tod, box, raw_attrs["pill"], count))

    schedule = Schedule(tuple(slots))
    policy = EscalationPolicy(**policy_kwargs)
    for v in validate_schedule(schedule):
        errors.append(ConfigError(0, f"{v.code}: {v.message}"))
    for v in validate_policy(policy):
        errors.append(ConfigError(0, f"{v.code}: {v.message}"))
    return ConfigResult(schedule, policy, tuple(errors))


def format_config(schedule: Schedule, policy: EscalationPolicy) -> str:
    """Render a schedule and policy back into the configuration format."""
    lines = []
    for d in schedule.slots:
        lines.append(f"slot.{d.slot.name}.time = {d.time_of_day // 60:02d}:{d.time_of_day % 60:02d}")
        lines.append(f"slot.{d.slot.name}.box = {d.compartment}")
        lines.append(f"slot.{d.slot.name}.pill = {d.pill_name}")
        lines.append(f"slot.{d.slot.name}.count = {d.pill_count}")
    for key in _POLICY_INT_KEYS + _POLICY_STR_KEYS:
        lines.append(f"policy.{key} = {getattr(policy, key)}")
    return "\n".join(lines) + "\n"

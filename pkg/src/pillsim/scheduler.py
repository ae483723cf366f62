"""Next-dose computation and dose timer arming against the virtual clock."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

from .domain import DoseInstance, DoseSlot, Schedule, SlotId, WallTime, validate_schedule
from .errors import InvalidRangeError, InvalidScheduleError


@dataclass(frozen=True)
class NextDue:
    """The upcoming dose instance and how far away it is.

    Carries the resolved DoseSlot so display code does not need the schedule.
    """

    instance: DoseInstance
    dose: DoseSlot
    seconds_until: int


def _require_valid(s: Schedule) -> None:
    violations = validate_schedule(s)
    if violations:
        raise InvalidScheduleError(violations)


def _instance_on(dose: DoseSlot, day) -> DoseInstance:
    due = datetime.combine(day, dose.due_time())
    return DoseInstance(day, dose.slot, due)


def next_due(s: Schedule, now: WallTime) -> NextDue | None:
    """Earliest dose instance with due_at >= now, or None for an empty schedule.

    A dose due exactly at ``now`` is returned with seconds_until 0.
    """
    _require_valid(s)
    best: tuple[WallTime, DoseSlot] | None = None
    for dose in s.slots:
        candidate = datetime.combine(now.date(), dose.due_time())
        if candidate < now:
            candidate += timedelta(days=1)
        if best is None or candidate < best[0]:
            best = (candidate, dose)
    if best is None:
        return None
    due_at, dose = best
    instance = DoseInstance(due_at.date(), dose.slot, due_at)
    return NextDue(instance, dose, int((due_at - now).total_seconds()))


def due_instances(s: Schedule, start: WallTime, end: WallTime) -> list[DoseInstance]:
    """Every dose instance with start <= due_at < end, ordered by due_at."""
    _require_valid(s)
    if start > end:
        raise InvalidRangeError(f"range start {start} after end {end}")
    out: list[DoseInstance] = []
    day = start.date()
    while datetime.combine(day, datetime.min.time()) < end:
        for dose in s.slots:
            inst = _instance_on(dose, day)
            if start <= inst.due_at < end:
                out.append(inst)
        day += timedelta(days=1)
    out.sort(key=lambda i: i.due_at)
    return out


def arm_next(s: Schedule, now: WallTime, clock, previous_id: int | None = None) -> tuple[int, DoseInstance] | None:
    """Arm the clock's one-shot dose timer for the next due instance.

    Cancels ``previous_id`` if it is still pending. Returns the new timer id
    and its instance, or None when the schedule is empty.
    """
    if previous_id is not None:
        clock.cancel_timer(previous_id)
    upcoming = next_due(s, now)
    if upcoming is None:
        return None
    timer_id = clock.arm_timer_at(upcoming.instance.due_at, ("dose", upcoming.instance))
    return timer_id, upcoming.instance

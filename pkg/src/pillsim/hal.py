"""Simulated hardware: deterministic virtual clock, debounced lid sensors, indicators.

Time resolution is one second, matching the DS1307. All stimuli and timers
live on the same clock so every run is reproducible event for event.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from datetime import timedelta
from enum import Enum

from .domain import COMPARTMENTS, WallTime
from .errors import UnknownCompartmentError

DEBOUNCE_S = 1  # 50 ms sensor window rounded up to the 1 s clock tick


@dataclass(frozen=True)
class FiredTimer:
    fire_at: WallTime
    timer_id: int
    tag: tuple


class TimerFate(Enum):
    ARMED = "ARMED"
    FIRED = "FIRED"
    CANCELLED = "CANCELLED"


class VirtualClock:
    """One-second-resolution clock with one-shot timers.

    Timers fire in (fire_at, arm order); ids are strictly increasing. The
    ledger records each timer's fate so audits can prove every timer fired
    exactly once or was cancelled exactly once.
    """

    def __init__(self, start: WallTime):
        self._now = start.replace(microsecond=0)
        self._heap: list[tuple[WallTime, int, int, tuple]] = []
        self._next_id = 1
        self._cancelled: set[int] = set()
        self.ledger: dict[int, TimerFate] = {}

    @property
    def now(self) -> WallTime:
        return self._now

    def arm_timer(self, delay_s: int, tag: tuple) -> int:
        if delay_s < 0:
            raise ValueError("timer delay must be >= 0")
        return self.arm_timer_at(self._now + timedelta(seconds=delay_s), tag)

    def arm_timer_at(self, fire_at: WallTime, tag: tuple) -> int:
        """Arm a one-shot timer at an absolute deadline (>= now)."""
        if fire_at < self._now:
            raise ValueError(f"deadline {fire_at} is in the past")
        timer_id = self._next_id
        self._next_id += 1
        heapq.heappush(self._heap, (fire_at, timer_id, timer_id, tag))
        self.ledger[timer_id] = TimerFate.ARMED
        return timer_id

    def cancel_timer(self, timer_id: int) -> bool:
        """Cancel a pending timer; returns False if it already fired or was cancelled."""
        if self.ledger.get(timer_id) is not TimerFate.ARMED:
            return False
        self._cancelled.add(timer_id)
        self.ledger[timer_id] = TimerFate.CANCELLED
        return True

    def _drop_cancelled(self) -> None:
        while self._heap and self._heap[0][1] in self._cancelled:
            _, timer_id, _, _ = heapq.heappop(self._heap)
            self._cancelled.discard(timer_id)

    def peek_deadline(self) -> WallTime | None:
        self._drop_cancelled()
        return self._heap[0][0] if self._heap else None

    def pop_next_due(self, limit: WallTime, inclusive: bool = True) -> FiredTimer | None:
        """Step ``now`` to the next deadline within ``limit`` and pop that timer.

        Returns None (and leaves ``now`` unchanged) once no pending timer is
        due within the limit. Device loops interleave work between pops so
        timers armed by handlers still land inside the window.
        """
        self._drop_cancelled()
        if not self._heap:
            return None
        fire_at, timer_id, _, tag = self._heap[0]
        if fire_at > limit or (not inclusive and fire_at == limit):
            return None
        heapq.heappop(self._heap)
        self._now = max(self._now, fire_at)
        self.ledger[timer_id] = TimerFate.FIRED
        return FiredTimer(fire_at, timer_id, tag)

    def jump_to(self, t: WallTime) -> None:
        """Move ``now`` directly to ``t``; pending absolute deadlines are kept."""
        self._now = t.replace(microsecond=0)

    def advance(self, dt_s: int) -> list[FiredTimer]:
        """Move forward dt_s seconds, firing every timer due on the way, in order."""
        if dt_s < 0:
            raise ValueError("cannot advance backwards")
        target = self._now + timedelta(seconds=dt_s)
        fired = []
        while True:
            f = self.pop_next_due(target)
            if f is None:
                break
            fired.append(f)
        self.jump_to(target)
        return fired

    def set_time(self, t: WallTime) -> tuple[list[FiredTimer], WallTime, WallTime]:
        """Set ``now`` forward or backward, keeping absolute deadlines.

        Timers with fire_at strictly before the new time fire during the jump,
        in order. Returns (fired, old, new).
        """
        old = self._now
        fired = []
        if t > old:
            while True:
                f = self.pop_next_due(t, inclusive=False)
                if f is None:
                    break
                fired.append(f)
        self.jump_to(t)
        return fired, old, t


@dataclass
class _Lid:
    raw_open: bool = False
    debounced_open: bool = False
    last_change: WallTime | None = None
    pending_timer: int | None = None


class LidSensors:
    """Per-compartment IR lid sensors with a one-tick debounce.

    A raw change only becomes a LID event if it survives to the next second;
    flapping inside one second is swallowed.
    """

    def __init__(self, clock: VirtualClock):
        self._clock = clock
        self._lids = {box: _Lid() for box in COMPARTMENTS}

    def _lid(self, box: int) -> _Lid:
        if box not in self._lids:
            raise UnknownCompartmentError(f"no compartment {box!r}")
        return self._lids[box]

    def raw_open(self, box: int) -> bool:
        return self._lid(box).raw_open

    def debounced_open(self, box: int) -> bool:
        return self._lid(box).debounced_open

    def set_raw(self, box: int, is_open: bool) -> None:
        """Change the raw sensor value at the clock's current time."""
        lid = self._lid(box)
        if lid.raw_open == is_open:
            return
        lid.raw_open = is_open
        lid.last_change = self._clock.now
        if lid.pending_timer is not None:
            self._clock.cancel_timer(lid.pending_timer)
            lid.pending_timer = None
        if lid.raw_open != lid.debounced_open:
            lid.pending_timer = self._clock.arm_timer(DEBOUNCE_S, ("debounce", box))

    def on_debounce_timer(self, box: int) -> bool | None:
        """Resolve a fired debounce timer; returns the promoted value or None."""
        lid = self._lid(box)
        lid.pending_timer = None
        if lid.raw_open == lid.debounced_open:
            return None
        lid.debounced_open = lid.raw_open
        return lid.debounced_open


class Indicators:
    """Buzzer plus one blinkable LED per compartment."""

    def __init__(self):
        self.buzzer = False
        self.leds = {box: False for box in COMPARTMENTS}

    def set_led(self, box: int, blinking: bool) -> None:
        if box not in self.leds:
            raise UnknownCompartmentError(f"no compartment {box!r}")
        self.leds[box] = blinking

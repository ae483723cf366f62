import random
from datetime import timedelta

import pytest

from pillsim.domain import walltime
from pillsim.errors import UnknownCompartmentError
from pillsim.hal import DEBOUNCE_S, Indicators, LidSensors, TimerFate, VirtualClock

T0 = walltime(2017, 3, 1, 7, 0, 0)


class TestVirtualClock:
    def test_advance_without_timers(self):
        clock = VirtualClock(T0)
        assert clock.advance(3600) == []
        assert clock.now == walltime(2017, 3, 1, 8, 0, 0)

    def test_timer_fires_at_deadline(self):
        clock = VirtualClock(T0)
        tid = clock.arm_timer(10, ("stage",))
        fired = clock.advance(10)
        assert len(fired) == 1
        assert fired[0].timer_id == tid
        assert fired[0].fire_at == T0 + timedelta(seconds=10)
        assert clock.now == T0 + timedelta(seconds=10)

    def test_timer_ids_strictly_increase(self):
        clock = VirtualClock(T0)
        ids = [clock.arm_timer(i, ("t", i)) for i in range(5)]
        assert ids == sorted(ids)
        assert len(set(ids)) == 5

    def test_same_deadline_fires_in_arm_order(self):
        clock = VirtualClock(T0)
        a = clock.arm_timer(5, ("a",))
        b = clock.arm_timer(5, ("b",))
        fired = clock.advance(5)
        assert [f.timer_id for f in fired] == [a, b]

    def test_delay_zero_fires_on_next_advance(self):
        clock = VirtualClock(T0)
        tid = clock.arm_timer(0, ("now",))
        fired = clock.advance(0)
        assert [f.timer_id for f in fired] == [tid]

    def test_interleaved_ordering(self):
        clock = VirtualClock(T0)
        late = clock.arm_timer(60, ("late",))
        early = clock.arm_timer(5, ("early",))
        fired = clock.advance(120)
        assert [f.timer_id for f in fired] == [early, late]
        assert [f.fire_at for f in fired] == [
            T0 + timedelta(seconds=5),
            T0 + timedelta(seconds=60),
        ]

    def test_cancel_prevents_firing(self):
        clock = VirtualClock(T0)
        tid = clock.arm_timer(5, ("x",))
        assert clock.cancel_timer(tid) is True
        assert clock.advance(10) == []
        assert clock.cancel_timer(tid) is False  # already cancelled

    def test_cancel_after_fire_is_refused(self):
        clock = VirtualClock(T0)
        tid = clock.arm_timer(5, ("x",))
        clock.advance(5)
        assert clock.cancel_timer(tid) is False

    def test_negative_advance_rejected(self):
        with pytest.raises(ValueError):
            VirtualClock(T0).advance(-1)

    def test_now_is_nondecreasing_through_advances(self):
        clock = VirtualClock(T0)
        rng = random.Random(3)
        seen = [clock.now]
        for _ in range(50):
            if rng.random() < 0.5:
                clock.arm_timer(rng.randrange(0, 100), ("t",))
            for f in clock.advance(rng.randrange(0, 50)):
                seen.append(f.fire_at)
            seen.append(clock.now)
        assert seen == sorted(seen)


class TestSetTime:
    def test_forward_jump_below_deadlines(self):
        clock = VirtualClock(T0)
        clock.arm_timer(3600, ("dose",))  # 08:00
        fired, old, new = clock.set_time(walltime(2017, 3, 1, 7, 30, 0))
        assert fired == []
        assert (old, new) == (T0, walltime(2017, 3, 1, 7, 30, 0))
        assert clock.peek_deadline() == walltime(2017, 3, 1, 8, 0, 0)

    def test_forward_jump_over_deadline_fires_during_jump(self):
        clock = VirtualClock(T0)
        tid = clock.arm_timer(3600, ("dose",))  # 08:00
        fired, _, _ = clock.set_time(walltime(2017, 3, 1, 9, 0, 0))
        assert [f.timer_id for f in fired] == [tid]
        assert fired[0].fire_at == walltime(2017, 3, 1, 8, 0, 0)
        assert clock.now == walltime(2017, 3, 1, 9, 0, 0)

    def test_jump_exactly_to_deadline_keeps_timer_pending(self):
        # set_time fires strictly-before deadlines; the boundary timer
        # fires on the next advance instead.
        clock = VirtualClock(T0)
        tid = clock.arm_timer(3600, ("dose",))
        fired, _, _ = clock.set_time(walltime(2017, 3, 1, 8, 0, 0))
        assert fired == []
        assert [f.timer_id for f in clock.advance(0)] == [tid]

    def test_set_to_current_now_changes_nothing(self):
        clock = VirtualClock(T0)
        clock.arm_timer(0, ("t",))
        fired, old, new = clock.set_time(T0)
        assert fired == [] and old == new == T0

    def test_backward_jump_keeps_pending_timers(self):
        clock = VirtualClock(T0)
        tid = clock.arm_timer(600, ("t",))  # 07:10
        fired, _, _ = clock.set_time(walltime(2017, 3, 1, 6, 0, 0))
        assert fired == []
        assert clock.now == walltime(2017, 3, 1, 6, 0, 0)
        fired = clock.advance(7200)
        assert [f.timer_id for f in fired] == [tid]
        assert fired[0].fire_at == walltime(2017, 3, 1, 7, 10, 0)


def test_timer_ledger_audits_every_timer():
    rng = random.Random(11)
    clock = VirtualClock(T0)
    armed = []
    for _ in range(200):
        roll = rng.random()
        if roll < 0.5:
            armed.append(clock.arm_timer(rng.randrange(0, 300), ("t",)))
        elif roll < 0.7 and armed:
            clock.cancel_timer(rng.choice(armed))
        else:
            clock.advance(rng.randrange(0, 120))
    clock.advance(600)
    # every timer is now FIRED xor CANCELLED, never both, never neither
    assert set(clock.ledger) == set(armed)
    assert all(fate in (TimerFate.FIRED, TimerFate.CANCELLED) for fate in clock.ledger.values())


class TestLidDebounce:
    def make(self):
        clock = VirtualClock(T0)
        return clock, LidSensors(clock)

    def fire_debounces(self, clock, sensors, dt):
        events = []
        for f in clock.advance(dt):
            if f.tag[0] == "debounce":
                promoted = sensors.on_debounce_timer(f.tag[1])
                if promoted is not None:
                    events.append((f.fire_at, f.tag[1], promoted))
        return events

    def test_stable_open_emits_one_event_next_second(self):
        clock, sensors = self.make()
        sensors.set_raw(1, True)
        events = self.fire_debounces(clock, sensors, 5)
        assert events == [(T0 + timedelta(seconds=DEBOUNCE_S), 1, True)]
        assert sensors.debounced_open(1) is True

    def test_idempotent_set_no_event(self):
        clock, sensors = self.make()
        sensors.set_raw(1, False)  # already closed
        assert self.fire_debounces(clock, sensors, 5) == []

    def test_bounce_within_one_second_swallowed(self):
        clock, sensors = self.make()
        sensors.set_raw(1, True)
        sensors.set_raw(1, False)  # same second
        assert self.fire_debounces(clock, sensors, 5) == []
        assert sensors.debounced_open(1) is False

    def test_double_bounce_lands_on_final_value(self):
        clock, sensors = self.make()
        sensors.set_raw(1, True)
        sensors.set_raw(1, False)
        sensors.set_raw(1, True)  # ends open, still same second
        events = self.fire_debounces(clock, sensors, 5)
        assert events == [(T0 + timedelta(seconds=DEBOUNCE_S), 1, True)]

    def test_events_never_closer_than_debounce_window(self):
        clock, sensors = self.make()
        rng = random.Random(5)
        stamps = []
        for _ in range(100):
            sensors.set_raw(1, rng.random() < 0.5)
            for at, box, _ in self.fire_debounces(clock, sensors, rng.randrange(0, 4)):
                stamps.append(at)
        for a, b in zip(stamps, stamps[1:]):
            assert (b - a).total_seconds() >= DEBOUNCE_S

    def test_unknown_compartment_rejected(self):
        _, sensors = self.make()
        with pytest.raises(UnknownCompartmentError):
            sensors.set_raw(4, True)


class TestIndicators:
    def test_leds_and_buzzer(self):
        ind = Indicators()
        assert ind.buzzer is False
        ind.buzzer = True
        ind.set_led(2, True)
        assert ind.leds == {1: False, 2: True, 3: False}
        ind.set_led(2, False)
        assert ind.leds[2] is False
        with pytest.raises(UnknownCompartmentError):
            ind.set_led(0, True)

"""The simulated device: one event loop wiring clock, sensors, FSM, modem and log.

All mutation funnels through this object; callers drive it with stimuli
(advance/set_time/open_lid/...) and observe snapshots between events.
"""

from __future__ import annotations

from datetime import timedelta
from pathlib import Path
from typing import Callable

from . import escalation as fsm
from .adherence import LogStore, RecordKind
from .domain import (
    EscalationPolicy,
    Schedule,
    WallTime,
    format_walltime,
    validate_policy,
    validate_schedule,
)
from .errors import InvalidScheduleError, PillsimError
from .gsm import ModemFaultPlan, SendOutcome, SimModem, SmsDriver, SmsMessage, Transcript
from .hal import FiredTimer, Indicators, LidSensors, VirtualClock
from .lcd import LcdFrame, render_alarm, render_idle
from .scheduler import arm_next, next_due

RECENT_LOG_LIMIT = 20

Observer = Callable[[fsm.DeviceEvent, WallTime], None]


class Device:
    def __init__(
        self,
        start_time: WallTime,
        schedule: Schedule = Schedule(),
        policy: EscalationPolicy = EscalationPolicy(),
        log_path: str | Path | None = None,
    ):
        bad = validate_schedule(schedule)
        if bad:
            raise InvalidScheduleError(bad)
        bad = validate_policy(policy)
        if bad:
            raise PillsimError(f"invalid policy: {', '.join(v.code for v in bad)}")

        self.clock = VirtualClock(start_time)
        self.sensors = LidSensors(self.clock)
        self.indicators = Indicators()
        self.store = LogStore(log_path)
        self.modem = SimModem()
        self.transcript = Transcript()
        self.driver = SmsDriver(self.clock, self.modem, self.transcript, self._sms_complete)
        self.schedule = schedule
        self.policy = policy
        self.state = fsm.IDLE_STATE
        self.sms_counts = {fsm.Recipient.PATIENT.value: 0, fsm.Recipient.FAMILY.value: 0}
        self.observers: list[Observer] = []

        self._display_alarm: fsm.ShowAlarmScreen | None = None
        self._stage_timer_id: int | None = None
        self._dose_timer_id: int | None = None
        self._rearm_dose(self.clock.now)

    # --- stimuli ---------------------------------------------------------

    def advance(self, seconds: int) -> int:
        """Move virtual time forward, processing every due event in order."""
        if seconds < 0:
            raise ValueError("cannot advance backwards")
        target = self.clock.now + timedelta(seconds=seconds)
        count = 0
        while True:
            fired = self.clock.pop_next_due(target)
            if fired is None:
                break
            self._dispatch_fired(fired)
            count += 1
        self.clock.jump_to(target)
        return count

    def set_time(self, t: WallTime) -> None:
        """Set the wall clock forward or backward.

        Pending timers keep their absolute deadlines and fire during a forward
        jump; dose timers overtaken by the jump are not retroactively fired.
        """
        old = self.clock.now
        if t > old:
            while True:
                fired = self.clock.pop_next_due(t, inclusive=False)
                if fired is None:
                    break
                if fired.tag[0] == "dose":
                    self._dose_timer_id = None  # skipped, re-armed below
                    continue
                self._dispatch_fired(fired)
        self.clock.jump_to(t)
        self._deliver(fsm.TimeSet(old, t), t)
        self._rearm_dose(t)

    def open_lid(self, box: int) -> None:
        self.sensors.set_raw(box, True)

    def close_lid(self, box: int) -> None:
        self.sensors.set_raw(box, False)

    def set_modem_fault(self, plan: ModemFaultPlan) -> None:
        self.modem.plan = plan

    def set_schedule(self, schedule: Schedule) -> None:
        bad = validate_schedule(schedule)
        if bad:
            raise InvalidScheduleError(bad)
        self.schedule = schedule
        self._rearm_dose(self.clock.now)

    def set_policy(self, policy: EscalationPolicy) -> None:
        bad = validate_policy(policy)
        if bad:
            raise PillsimError(f"invalid policy: {', '.join(v.code for v in bad)}")
        self.policy = policy

    # --- event plumbing ---------------------------------------------------

    def _rearm_dose(self, now: WallTime) -> None:
        armed = arm_next(self.schedule, now, self.clock, self._dose_timer_id)
        self._dose_timer_id = armed[0] if armed else None

    def _dispatch_fired(self, fired: FiredTimer) -> None:
        kind = fired.tag[0]
        if kind == "dose":
            self._dose_timer_id = None
            instance = fired.tag[1]
            dose = self.schedule.dose_for(instance.slot)
            # Arm the following dose first so back-to-back doses still fire.
            self._rearm_dose(fired.fire_at + timedelta(seconds=1))
            if dose is not None:
                self._deliver(fsm.DoseDue(instance, dose), fired.fire_at)
        elif kind == "stage":
            if fired.timer_id == self._stage_timer_id:
                self._stage_timer_id = None
                self._deliver(fsm.StageTimerFired(), fired.fire_at)
        elif kind == "debounce":
            box = fired.tag[1]
            promoted = self.sensors.on_debounce_timer(box)
            if promoted is True:
                self._deliver(fsm.LidOpened(box), fired.fire_at)
            elif promoted is False:
                self._deliver(fsm.LidClosed(box), fired.fire_at)
        elif kind == "sms_timeout":
            self.driver.on_timeout(fired.timer_id)

    def _deliver(self, event: fsm.DeviceEvent, at: WallTime) -> None:
        self.state, actions = fsm.step(self.state, event, self.policy, at)
        self._apply_actions(actions, at)
        for observer in list(self.observers):
            observer(event, at)

    def _apply_actions(self, actions: list[fsm.Action], at: WallTime) -> None:
        # SMS sends run after the whole list so their log records follow
        # the SMS_REQUESTED record that announced them.
        sends: list[fsm.SendSms] = []
        for action in actions:
            if isinstance(action, fsm.BuzzerOn):
                self.indicators.buzzer = True
            elif isinstance(action, fsm.BuzzerOff):
                self.indicators.buzzer = False
            elif isinstance(action, fsm.LedBlink):
                self.indicators.set_led(action.compartment, True)
            elif isinstance(action, fsm.LedOff):
                self.indicators.set_led(action.compartment, False)
            elif isinstance(action, fsm.ShowAlarmScreen):
                self._display_alarm = action
            elif isinstance(action, fsm.ShowIdleScreen):
                self._display_alarm = None
            elif isinstance(action, fsm.ArmStageTimer):
                self._stage_timer_id = self.clock.arm_timer(action.seconds, ("stage",))
            elif isinstance(action, fsm.CancelStageTimer):
                if self._stage_timer_id is not None:
                    self.clock.cancel_timer(self._stage_timer_id)
                    self._stage_timer_id = None
            elif isinstance(action, fsm.Log):
                self.store.append(action.kind, at, dict(action.fields))
            elif isinstance(action, fsm.SendSms):
                sends.append(action)
        for send in sends:
            number = (
                self.policy.patient_number
                if send.recipient is fsm.Recipient.PATIENT
                else self.policy.family_number
            )
            self.driver.request_send(
                SmsMessage(number, send.body), send.recipient.value, self.policy.sms_retries
            )

    def _sms_complete(self, label: str, msg: SmsMessage, outcome: SendOutcome) -> None:
        if outcome.sent:
            self.store.append(
                RecordKind.SMS_SENT,
                self.clock.now,
                {"recipient": label, "sms_ref": outcome.ref, "attempts": outcome.attempts},
            )
            self.sms_counts[label] += 1
        else:
            self.store.append(
                RecordKind.SMS_FAILED,
                self.clock.now,
                {"recipient": label, "reason": outcome.reason, "attempts": outcome.attempts},
            )

    # --- observation ------------------------------------------------------

    def lcd_frame(self) -> LcdFrame:
        if self._display_alarm is not None:
            return render_alarm(self._display_alarm.dose, self.state.stage.value)
        return render_idle(self.clock.now, next_due(self.schedule, self.clock.now))

    def state_dict(self) -> dict:
        """The bridge snapshot payload, minus the snapshot seq."""
        return {
            "time": format_walltime(self.clock.now),
            "state": self.state.stage.value,
            "lcd": list(self.lcd_frame().rows),
            "leds": [self.indicators.leds[box] for box in (1, 2, 3)],
            "buzzer": self.indicators.buzzer,
            "recent_log": [
                {"seq": r.seq, "at": format_walltime(r.at), "kind": r.kind.value, **r.fields}
                for r in self.store.records[-RECENT_LOG_LIMIT:]
            ],
            "sms_sentbox": dict(self.sms_counts),
        }

    def close(self) -> None:
        self.store.close()

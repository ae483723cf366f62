"""Per-dose alarm escalation: ring, snooze, re-ring, patient SMS, family SMS.

``step`` is a pure, total transition function; hardware and log effects come
back as an ordered action list for the device loop to interpret.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta
from enum import Enum
from typing import Union

from .adherence import RecordKind
from .domain import DoseInstance, DoseSlot, EscalationPolicy, WallTime, format_walltime
from .gsm import format_family_sms, format_patient_sms


class Stage(Enum):
    IDLE = "IDLE"
    RING1 = "RING1"
    SNOOZED = "SNOOZED"
    RING2 = "RING2"
    WAIT_PATIENT = "WAIT_PATIENT"
    WAIT_FAMILY = "WAIT_FAMILY"


class Recipient(Enum):
    PATIENT = "PATIENT"
    FAMILY = "FAMILY"


@dataclass(frozen=True)
class EscalationState:
    """Current stage plus, outside IDLE, the dose being escalated."""

    stage: Stage
    active: DoseInstance | None = None
    dose: DoseSlot | None = None
    stage_deadline: WallTime | None = None


IDLE_STATE = EscalationState(Stage.IDLE)


# --- device events ------------------------------------------------------------


@dataclass(frozen=True)
class DoseDue:
    instance: DoseInstance
    dose: DoseSlot


@dataclass(frozen=True)
class LidOpened:
    compartment: int


@dataclass(frozen=True)
class LidClosed:
    compartment: int


@dataclass(frozen=True)
class StageTimerFired:
    pass


@dataclass(frozen=True)
class TimeSet:
    old: WallTime
    new: WallTime


DeviceEvent = Union[DoseDue, LidOpened, LidClosed, StageTimerFired, TimeSet]


# --- actions -------------------------------------------------------------------


@dataclass(frozen=True)
class BuzzerOn:
    pass


@dataclass(frozen=True)
class BuzzerOff:
    pass


@dataclass(frozen=True)
class LedBlink:
    compartment: int


@dataclass(frozen=True)
class LedOff:
    compartment: int


@dataclass(frozen=True)
class ShowAlarmScreen:
    dose: DoseSlot


@dataclass(frozen=True)
class ShowIdleScreen:
    pass


@dataclass(frozen=True)
class SendSms:
    recipient: Recipient
    body: str


@dataclass(frozen=True)
class Log:
    kind: RecordKind
    fields: tuple[tuple[str, object], ...]


@dataclass(frozen=True)
class ArmStageTimer:
    seconds: int


@dataclass(frozen=True)
class CancelStageTimer:
    pass


Action = Union[
    BuzzerOn, BuzzerOff, LedBlink, LedOff, ShowAlarmScreen, ShowIdleScreen,
    SendSms, Log, ArmStageTimer, CancelStageTimer,
]


def _log(kind: RecordKind, **fields) -> Log:
    return Log(kind, tuple(fields.items()))


def is_terminal_outcome(kind: RecordKind) -> bool:
    """True exactly for the records that close out a dose instance."""
    return kind in (RecordKind.TAKEN, RecordKind.MISSED)


def _enter(stage: Stage, state_or_event, duration_s: int, now: WallTime) -> EscalationState:
    instance = state_or_event.instance if isinstance(state_or_event, DoseDue) else state_or_event.active
    dose = state_or_event.dose
    return EscalationState(stage, instance, dose, now + timedelta(seconds=duration_s))


def step(
    state: EscalationState,
    event: DeviceEvent,
    policy: EscalationPolicy,
    now: WallTime,
) -> tuple[EscalationState, list[Action]]:
    """Apply one event; returns the new state and the ordered effect list.

    Total over every (stage, event) pair and free of side effects: replaying
    the same events from IDLE yields an identical action stream.
    """
    if isinstance(event, DoseDue):
        if state.stage is Stage.IDLE:
            new = _enter(Stage.RING1, event, policy.ring_s, now)
            return new, [
                BuzzerOn(),
                LedBlink(event.dose.compartment),
                ShowAlarmScreen(event.dose),
                ArmStageTimer(policy.ring_s),
                _log(RecordKind.DOSE_DUE, slot=event.instance.slot.name, compartment=event.dose.compartment),
                _log(RecordKind.RING_START, slot=event.instance.slot.name),
            ]
        # A dose may not preempt a live escalation: log it due, drop it.
        return state, [
            _log(RecordKind.DOSE_DUE, slot=event.instance.slot.name, compartment=event.dose.compartment),
            _log(RecordKind.DOSE_DROPPED, slot=event.instance.slot.name, reason="ILLEGAL_EVENT"),
        ]

    if isinstance(event, LidOpened):
        if state.stage is Stage.IDLE:
            return state, [_log(RecordKind.UNSCHEDULED_OPEN, compartment=event.compartment)]
        if event.compartment == state.dose.compartment:
            # Late take counts: any stage, even after the family SMS went out.
            return IDLE_STATE, [
                BuzzerOff(),
                LedOff(event.compartment),
                ShowIdleScreen(),
                CancelStageTimer(),
                _log(RecordKind.TAKEN, slot=state.active.slot.name, compartment=event.compartment),
            ]
        return state, [
            _log(RecordKind.WRONG_COMPARTMENT, slot=state.active.slot.name, compartment=event.compartment),
        ]

    if isinstance(event, LidClosed):
        return state, [_log(RecordKind.LID_CLOSE, compartment=event.compartment)]

    if isinstance(event, TimeSet):
        return state, [
            _log(RecordKind.TIME_SET, old=format_walltime(event.old), new=format_walltime(event.new)),
        ]

    assert isinstance(event, StageTimerFired)
    slot_name = state.active.slot.name if state.active else None

    if state.stage is Stage.RING1:
        new = _enter(Stage.SNOOZED, state, policy.snooze_s, now)
        return new, [
            BuzzerOff(),
            ArmStageTimer(policy.snooze_s),
            _log(RecordKind.SNOOZE_START, slot=slot_name),
        ]
    if state.stage is Stage.SNOOZED:
        new = _enter(Stage.RING2, state, policy.ring_s, now)
        return new, [
            BuzzerOn(),
            ArmStageTimer(policy.ring_s),
            _log(RecordKind.RING_START, slot=slot_name),
        ]
    if state.stage is Stage.RING2:
        new = _enter(Stage.WAIT_PATIENT, state, policy.wait_patient_s, now)
        body = format_patient_sms(state.dose, state.active.due_at)
        return new, [
            BuzzerOff(),
            SendSms(Recipient.PATIENT, body),
            ArmStageTimer(policy.wait_patient_s),
            _log(RecordKind.SMS_REQUESTED, slot=slot_name, recipient=Recipient.PATIENT.value),
        ]
    if state.stage is Stage.WAIT_PATIENT:
        new = _enter(Stage.WAIT_FAMILY, state, policy.wait_family_s, now)
        body = format_family_sms(policy.patient_name, state.dose, state.active.due_at)
        return new, [
            SendSms(Recipient.FAMILY, body),
            ArmStageTimer(policy.wait_family_s),
            _log(RecordKind.SMS_REQUESTED, slot=slot_name, recipient=Recipient.FAMILY.value),
        ]
    if state.stage is Stage.WAIT_FAMILY:
        return IDLE_STATE, [
            LedOff(state.dose.compartment),
            ShowIdleScreen(),
            _log(RecordKind.MISSED, slot=slot_name, compartment=state.dose.compartment),
        ]
    # Stale timer in IDLE: nothing to escalate.
    return state, []

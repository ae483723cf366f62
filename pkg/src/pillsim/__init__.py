"""Deterministic simulation of an automatic pill reminder device."""

from .adherence import LogRecord, LogStore, RecordKind, export_csv, read_log, verify
from .device import Device
from .domain import (
    DoseInstance,
    DoseSlot,
    EscalationPolicy,
    Schedule,
    SlotId,
    Violation,
    parse_config,
    parse_walltime,
    policy_total_window,
    validate_policy,
    validate_schedule,
    walltime,
)
from .escalation import EscalationState, Recipient, Stage, is_terminal_outcome, step
from .gsm import (
    AtResponseParser,
    FaultMode,
    ModemFaultPlan,
    SimModem,
    SmsDriver,
    SmsMessage,
    format_family_sms,
    format_patient_sms,
)
from .hal import VirtualClock
from .lcd import LcdFrame, fit16, render_alarm, render_idle
from .scenario import RunReport, Scenario, parse_scenario, replay_check, run
from .scheduler import NextDue, arm_next, due_instances, next_due

__version__ = "0.1.0"

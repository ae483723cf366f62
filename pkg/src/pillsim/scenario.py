"""Line-oriented scenario scripts: parse, run deterministically, replay-check.

    # happy path
    set-time 2017-03-01T07:55:00
    schedule MORNING 08:00 1 "PARACETAMOL" 2
    advance 5m
    advance 30s
    open 1
    advance 2s
    expect-log TAKEN slot=MORNING
    expect-state IDLE

Keywords are case-insensitive; '#' starts a comment; durations are <n>s|<n>m|<n>h.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

from .adherence import RecordKind, read_log
from .device import Device
from .domain import (
    COMPARTMENTS,
    DoseSlot,
    EscalationPolicy,
    Schedule,
    SlotId,
    WallTime,
    parse_hhmm,
    parse_walltime,
    validate_policy,
    validate_schedule,
)
from .errors import PillsimError
from .escalation import Stage
from .gsm import FaultMode, ModemFaultPlan

LOG_FILENAME = "device.log"
TRANSCRIPT_FILENAME = "modem.transcript"


@dataclass(frozen=True)
class SetTimeStep:
    line: int
    at: WallTime


@dataclass(frozen=True)
class ScheduleStep:
    line: int
    dose: DoseSlot


@dataclass(frozen=True)
class PolicyStep:
    line: int
    key: str
    value: object


@dataclass(frozen=True)
class OpenStep:
    line: int
    box: int


@dataclass(frozen=True)
class CloseStep:
    line: int
    box: int


@dataclass(frozen=True)
class AdvanceStep:
    line: int
    seconds: int


@dataclass(frozen=True)
class ModemFaultStep:
    line: int
    plan: ModemFaultPlan


@dataclass(frozen=True)
class ExpectLogStep:
    line: int
    kind: RecordKind
    constraints: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class ExpectStateStep:
    line: int
    name: str


Step = Union[
    SetTimeStep, ScheduleStep, PolicyStep, OpenStep, CloseStep,
    AdvanceStep, ModemFaultStep, ExpectLogStep, ExpectStateStep,
]


@dataclass(frozen=True)
class Scenario:
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class ParseError:
    line: int
    column: int
    message: str


_TOKEN_RE = re.compile(r'"([^"]*)"|(\S+)')

_DURATION_RE = re.compile(r"^(\d+)(s|m|h)$")

_DURATION_UNITS = {"s": 1, "m": 60, "h": 3600}

_POLICY_INT_KEYS = ("ring_s", "snooze_s", "wait_patient_s", "wait_family_s", "sms_retries")
_POLICY_STR_KEYS = ("patient_number", "family_number", "patient_name")


@dataclass(frozen=True)
class _Tok:
    text: str
    col: int
    quoted: bool


def _strip_comment(line: str) -> str:
    in_quote = False
    for i, c in enumerate(line):
        if c == '"':
            in_quote = not in_quote
        elif c == "#" and not in_quote:
            return line[:i]
    return line


def _tokenize(line: str) -> list[_Tok]:
    code = _strip_comment(line)
    toks = []
    for m in _TOKEN_RE.finditer(code):
        quoted = m.group(1) is not None
        toks.append(_Tok(m.group(1) if quoted else m.group(2), m.start() + 1, quoted))
    return toks


def parse_duration(text: str) -> int:
    m = _DURATION_RE.match(text)
    if not m:
        raise ValueError(f"expected <n>s|<n>m|<n>h, got {text!r}")
    return int(m.group(1)) * _DURATION_UNITS[m.group(2)]


def _parse_box(tok: _Tok) -> int:
    try:
        box = int(tok.text)
    except ValueError:
        raise ValueError("compartment must be a number")
    if box not in COMPARTMENTS:
        raise ValueError("compartment out of range")
    return box


def parse_scenario(text: str) -> tuple[Scenario | None, list[ParseError]]:
    """Parse a scenario document; on any error returns (None, errors)."""
    errors: list[ParseError] = []
    steps: list[Step] = []
    time_set = False

    def fail(lineno: int, col: int, message: str) -> None:
        errors.append(ParseError(lineno, col, message))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize(raw)
        if not toks:
            continue
        keyword = toks[0].text.lower()
        args = toks[1:]
        try:
            if keyword == "set-time":
                if len(args) != 1:
                    raise ValueError("set-time needs one ISO timestamp")
                steps.append(SetTimeStep(lineno, parse_walltime(args[0].text)))
                time_set = True
            elif keyword == "schedule":
                if len(args) != 5:
                    raise ValueError("schedule needs: SLOT HH:MM BOX PILL COUNT")
                try:
                    slot = SlotId[args[0].text.upper()]
                except KeyError:
                    raise ValueError(f"unknown slot {args[0].text!r}")
                tod = parse_hhmm(args[1].text)
                box = _parse_box(args[2])
                pill = args[3].text
                try:
                    count = int(args[4].text)
                except ValueError:
                    raise ValueError("pill count must be a number")
                steps.append(ScheduleStep(lineno, DoseSlot(slot, tod, box, pill, count)))
            elif keyword == "policy":
                if len(args) != 2:
                    raise ValueError("policy needs: KEY VALUE")
                key = args[0].text
                if key in _POLICY_INT_KEYS:
                    try:
                        value: object = int(args[1].text)
                    except ValueError:
                        raise ValueError(f"policy {key} must be an integer")
                elif key in _POLICY_STR_KEYS:
                    value = args[1].text
                else:
                    raise ValueError(f"unknown policy key {key!r}")
                steps.append(PolicyStep(lineno, key, value))
            elif keyword in ("open", "close"):
                if not time_set:
                    raise ValueError("time not set")
                if len(args) != 1:
                    raise ValueError(f"{keyword} needs a compartment number")
                box = _parse_box(args[0])
                cls = OpenStep if keyword == "open" else CloseStep
                steps.append(cls(lineno, box))
            elif keyword == "advance":
                if not time_set:
                    raise ValueError("time not set")
                if len(args) != 1:
                    raise ValueError("advance needs a duration")
                steps.append(AdvanceStep(lineno, parse_duration(args[0].text)))
            elif keyword == "modem-fault":
                if not args:
                    raise ValueError("modem-fault needs a mode")
                mode_text = args[0].text.upper()
                try:
                    mode = FaultMode[mode_text]
                except KeyError:
                    raise ValueError(f"unknown fault mode {args[0].text!r}")
                if mode is FaultMode.ERROR_THEN_OK:
                    if len(args) != 2:
                        raise ValueError("error_then_ok needs a count")
                    plan = ModemFaultPlan(mode, int(args[1].text))
                else:
                    if len(args) != 1:
                        raise ValueError(f"{args[0].text} takes no arguments")
                    plan = ModemFaultPlan(mode)
                steps.append(ModemFaultStep(lineno, plan))
            elif keyword == "expect-log":
                if not time_set:
                    raise ValueError("time not set")
                if not args:
                    raise ValueError("expect-log needs a record kind")
                try:
                    kind = RecordKind[args[0].text.upper()]
                except KeyError:
                    raise ValueError(f"unknown record kind {args[0].text!r}")
                constraints = []
                for tok in args[1:]:
                    if "=" not in tok.text:
                        raise ValueError(f"expected field=value, got {tok.text!r}")
                    name, value = tok.text.split("=", 1)
                    constraints.append((name, value))
                steps.append(ExpectLogStep(lineno, kind, tuple(constraints)))
            elif keyword == "expect-state":
                if not time_set:
                    raise ValueError("time not set")
                if len(args) != 1:
                    raise ValueError("expect-state needs a state name")
                name = args[0].text.upper()
                if name not in Stage.__members__:
                    raise ValueError(f"unknown state {args[0].text!r}")
                steps.append(ExpectStateStep(lineno, name))
            else:
                raise ValueError(f"unknown keyword {toks[0].text!r}")
        except ValueError as e:
            fail(lineno, toks[0].col, str(e))

    if errors:
        return None, errors
    return Scenario(tuple(steps)), []


def parse_scenario_file(path: str | Path) -> tuple[Scenario | None, list[ParseError]]:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class RunReport:
    passed: bool
    failed_expectations: tuple[tuple[int, str], ...]
    log_path: Path
    transcript_path: Path


def _record_matches(rec, kind: RecordKind, constraints) -> bool:
    from .domain import format_walltime

    if rec.kind is not kind:
        return False
    for name, want in constraints:
        have = format_walltime(rec.at) if name == "at" else rec.field(name)
        if have is None or str(have) != want:
            return False
    return True


def run(scenario: Scenario, out_dir: str | Path) -> RunReport:
    """Execute a parsed scenario against a fresh device; deterministic output.

    EXPECT-LOG uses cursor semantics: each expectation scans only records
    appended after the previously matched one, so scenarios read in order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / LOG_FILENAME
    transcript_path = out / TRANSCRIPT_FILENAME
    log_path.unlink(missing_ok=True)

    failures: list[tuple[int, str]] = []
    device: Device | None = None
    schedule = Schedule()
    policy = EscalationPolicy()
    fault_plan: ModemFaultPlan | None = None

    def step_error(line: int, message: str) -> RunReport:
        failures.append((line, message))
        if device:
            device.transcript.write(transcript_path)
            device.close()
        else:
            transcript_path.write_text("", encoding="utf-8")
            log_path.touch()
        return RunReport(False, tuple(failures), log_path, transcript_path)

    cursor = 0
    for step in scenario.steps:
        try:
            if isinstance(step, SetTimeStep):
                if device is None:
                    device = Device(step.at, schedule, policy, log_path=log_path)
                    if fault_plan is not None:
                        device.set_modem_fault(fault_plan)
                else:
                    device.set_time(step.at)
            elif isinstance(step, ScheduleStep):
                schedule = (device.schedule if device else schedule).with_slot(step.dose)
                bad = validate_schedule(schedule)
                if bad:
                    raise PillsimError("; ".join(f"{v.code}: {v.message}" for v in bad))
                if device:
                    device.set_schedule(schedule)
            elif isinstance(step, PolicyStep):
                policy = replace(device.policy if device else policy, **{step.key: step.value})
                bad = validate_policy(policy)
                if bad:
                    raise PillsimError("; ".join(f"{v.code}: {v.message}" for v in bad))
                if device:
                    device.set_policy(policy)
            elif isinstance(step, ModemFaultStep):
                fault_plan = step.plan
                if device:
                    device.set_modem_fault(step.plan)
            elif isinstance(step, OpenStep):
                device.open_lid(step.box)
            elif isinstance(step, CloseStep):
                device.close_lid(step.box)
            elif isinstance(step, AdvanceStep):
                device.advance(step.seconds)
            elif isinstance(step, ExpectLogStep):
                matched = None
                for rec in device.store.records:
                    if rec.seq > cursor and _record_matches(rec, step.kind, step.constraints):
                        matched = rec
                        break
                if matched is None:
                    want = " ".join(f"{k}={v}" for k, v in step.constraints)
                    failures.append(
                        (step.line, f"no {step.kind.value} record {want} after seq {cursor}".rstrip())
                    )
                else:
                    cursor = matched.seq
            elif isinstance(step, ExpectStateStep):
                actual = device.state.stage.value
                if actual != step.name:
                    failures.append((step.line, f"expected state {step.name}, device is in {actual}"))
        except PillsimError as e:
            return step_error(step.line, str(e))

    if device:
        device.transcript.write(transcript_path)
        device.close()
    else:
        transcript_path.write_text("", encoding="utf-8")
        log_path.touch()
    return RunReport(not failures, tuple(failures), log_path, transcript_path)


@dataclass(frozen=True)
class Divergence:
    filename: str
    line: int
    expected: str
    actual: str


def replay_check(scenario: Scenario, reference_dir: str | Path, work_dir: str | Path) -> Divergence | None:
    """Re-run the scenario and byte-compare outputs against a reference run."""
    run(scenario, work_dir)
    for name in (LOG_FILENAME, TRANSCRIPT_FILENAME):
        ref_lines = (Path(reference_dir) / name).read_text(encoding="utf-8").splitlines()
        new_lines = (Path(work_dir) / name).read_text(encoding="utf-8").splitlines()
        for i in range(max(len(ref_lines), len(new_lines))):
            ref = ref_lines[i] if i < len(ref_lines) else "<missing>"
            new = new_lines[i] if i < len(new_lines) else "<missing>"
            if ref != new:
                return Divergence(name, i + 1, ref, new)
    return None

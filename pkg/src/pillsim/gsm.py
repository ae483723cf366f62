"""Text-mode SMS over the SIM800L AT dialect: formatting, codec, driver, simulated modem.

The normative dialogue for one send:

    > AT<CR>                      < <CR><LF>OK<CR><LF>
    > AT+CMGF=1<CR>               < <CR><LF>OK<CR><LF>
    > AT+CMGS="<number>"<CR>      < <CR><LF>>SP
    > <body><SUB>                 < <CR><LF>+CMGS: <n><CR><LF><CR><LF>OK<CR><LF>

Echo is off; PDU mode, inbound SMS and delivery reports are out of scope.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .domain import DoseSlot, WallTime
from .errors import DriverBusyError

CR = b"\r"
SUB = b"\x1a"

MAX_SMS_BODY = 160

RESPONSE_TIMEOUT_S = 10


@dataclass(frozen=True)
class SmsMessage:
    """One outbound text message: E.164 recipient, printable body <= 160 chars."""

    recipient_number: str
    body: str

    def __post_init__(self):
        if not 1 <= len(self.body) <= MAX_SMS_BODY:
            raise ValueError(f"SMS body length {len(self.body)} outside 1..{MAX_SMS_BODY}")
        if any(ord(c) < 32 or ord(c) > 126 for c in self.body):
            raise ValueError("SMS body must not contain control characters")


def _stamp(due: WallTime) -> str:
    return due.strftime("%H:%M %d-%m-%Y")


def format_patient_sms(dose: DoseSlot, due: WallTime) -> str:
    """Reminder body sent to the patient after the re-ring goes unanswered."""
    return f"MISSED DOSE: {dose.pill_name} x{dose.pill_count} at {_stamp(due)}. PLEASE TAKE IT NOW."


def format_family_sms(patient_name: str, dose: DoseSlot, due: WallTime) -> str:
    """Alert body sent to the family when the patient SMS also goes unanswered."""
    return f"ALERT: {patient_name} MISSED {dose.pill_name} x{dose.pill_count} at {_stamp(due)}."


# --- incremental response parser --------------------------------------------


class TokKind(Enum):
    OK = "OK"
    ERROR = "ERROR"
    PROMPT = "PROMPT"
    CMGS_REF = "CMGS_REF"
    UNKNOWN_LINE = "UNKNOWN_LINE"


@dataclass(frozen=True)
class Token:
    kind: TokKind
    value: object = None


_CMGS_RE = re.compile(r"^\+CMGS: (\d+)$")


class AtResponseParser:
    """Incremental tokenizer for modem responses; state persists across feeds."""

    def __init__(self):
        self._buf = bytearray()

    def reset(self) -> None:
        self._buf.clear()

    def feed(self, data: bytes) -> list[Token]:
        """Consume bytes, emitting tokens exactly when their framing completes."""
        self._buf.extend(data)
        tokens: list[Token] = []
        while True:
            if self._buf.startswith(b"> "):
                del self._buf[:2]
                tokens.append(Token(TokKind.PROMPT))
                continue
            idx = self._buf.find(b"\r\n")
            if idx < 0:
                break
            line = bytes(self._buf[:idx])
            del self._buf[: idx + 2]
            if not line:
                continue
            text = line.decode("ascii", errors="replace")
            if text == "OK":
                tokens.append(Token(TokKind.OK))
            elif text == "ERROR":
                tokens.append(Token(TokKind.ERROR))
            else:
                m = _CMGS_RE.match(text)
                if m:
                    tokens.append(Token(TokKind.CMGS_REF, int(m.group(1))))
                else:
                    tokens.append(Token(TokKind.UNKNOWN_LINE, text))
        return tokens


# --- simulated modem ----------------------------------------------------------


class FaultMode(Enum):
    NORMAL = "NORMAL"
    ERROR_ON_CMGS = "ERROR_ON_CMGS"
    SILENT = "SILENT"
    ERROR_THEN_OK = "ERROR_THEN_OK"


@dataclass(frozen=True)
class ModemFaultPlan:
    mode: FaultMode = FaultMode.NORMAL
    fail_first: int = 0

    def __post_init__(self):
        if self.mode is FaultMode.ERROR_THEN_OK and self.fail_first < 1:
            raise ValueError("ERROR_THEN_OK needs fail_first >= 1")


NORMAL_PLAN = ModemFaultPlan()

_CMGS_CMD_RE = re.compile(r'^AT\+CMGS="(\+\d{8,15})"$')

_OK = b"\r\nOK\r\n"
_ERROR = b"\r\nERROR\r\n"
_PROMPT = b"\r\n> "


class SimModem:
    """Test double for the SIM800L: replies per the normative dialogue.

    Accepted messages land in ``sentbox``; the fault plan substitutes ERROR
    or silence. A bare AT command marks the start of a dialogue attempt.
    """

    def __init__(self, plan: ModemFaultPlan = NORMAL_PLAN):
        self.plan = plan
        self.sentbox: list[SmsMessage] = []
        self.attempts_seen = 0
        self._next_ref = 1
        self._buf = bytearray()
        self._body_mode = False
        self._pending_number: str | None = None

    def step(self, incoming: bytes) -> bytes:
        self._buf.extend(incoming)
        out = bytearray()
        while True:
            if self._body_mode:
                idx = self._buf.find(SUB)
                if idx < 0:
                    break
                body = bytes(self._buf[:idx]).decode("ascii", errors="replace")
                del self._buf[: idx + 1]
                self._body_mode = False
                out += self._accept_body(body)
            else:
                idx = self._buf.find(CR)
                if idx < 0:
                    break
                line = bytes(self._buf[:idx]).decode("ascii", errors="replace")
                del self._buf[: idx + 1]
                out += self._respond(line)
        return bytes(out)

    def _respond(self, line: str) -> bytes:
        silent = self.plan.mode is FaultMode.SILENT
        if line == "AT":
            self.attempts_seen += 1
            if self.plan.mode is FaultMode.ERROR_THEN_OK and self.attempts_seen <= self.plan.fail_first:
                return b"" if silent else _ERROR
            return b"" if silent else _OK
        if line == "AT+CMGF=1":
            return b"" if silent else _OK
        m = _CMGS_CMD_RE.match(line)
        if m:
            if self.plan.mode is FaultMode.ERROR_ON_CMGS:
                return b"" if silent else _ERROR
            if silent:
                return b""
            self._pending_number = m.group(1)
            self._body_mode = True
            return _PROMPT
        return b"" if silent else _ERROR

    def _accept_body(self, body: str) -> bytes:
        assert self._pending_number is not None
        self.sentbox.append(SmsMessage(self._pending_number, body))
        ref = self._next_ref
        self._next_ref += 1
        self._pending_number = None
        return f"\r\n+CMGS: {ref}\r\n\r\nOK\r\n".encode("ascii")


# --- transcript ---------------------------------------------------------------


class Transcript:
    """Byte-level capture of the modem link, one hex-encoded line per exchange."""

    def __init__(self):
        self.entries: list[tuple[str, bytes]] = []

    def add(self, direction: str, data: bytes) -> None:
        assert direction in (">", "<")
        self.entries.append((direction, data))

    def to_text(self) -> str:
        return "".join(f"{d} {data.hex()}\n" for d, data in self.entries)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


# --- driver -------------------------------------------------------------------


class _Phase(Enum):
    IDLE = "IDLE"
    AWAIT_AT = "AWAIT_AT"
    AWAIT_CMGF = "AWAIT_CMGF"
    AWAIT_PROMPT = "AWAIT_PROMPT"
    AWAIT_SENT = "AWAIT_SENT"


@dataclass(frozen=True)
class SendOutcome:
    """SENT with the modem's message reference, or FAILED with a reason."""

    sent: bool
    ref: int | None = None
    reason: str | None = None
    attempts: int = 0


@dataclass
class _Request:
    msg: SmsMessage
    label: str
    retries: int


class SmsDriver:
    """Executes sends against the modem link, retrying the whole dialogue.

    Modeled as a sub-state-machine advanced by modem bytes and timeout timers
    so the device event loop never blocks. One send in flight at a time;
    further requests queue FIFO.
    """

    def __init__(self, clock, modem: SimModem, transcript: Transcript, on_complete):
        self._clock = clock
        self._modem = modem
        self._transcript = transcript
        self._on_complete = on_complete
        self._parser = AtResponseParser()
        self._queue: deque[_Request] = deque()
        self._current: _Request | None = None
        self._phase = _Phase.IDLE
        self._attempts = 0
        self._max_attempts = 1
        self._got_ref: int | None = None
        self._timeout_id: int | None = None

    @property
    def busy(self) -> bool:
        return self._current is not None

    def request_send(self, msg: SmsMessage, label: str, retries: int) -> None:
        """Queue one message; starts immediately when the driver is idle."""
        self._queue.append(_Request(msg, label, retries))
        if self._current is None:
            self._start_next()

    def _start_next(self) -> None:
        self._current = self._queue.popleft()
        self._max_attempts = 1 + self._current.retries
        self._attempts = 0
        self._start_attempt()

    def _start_attempt(self) -> None:
        self._attempts += 1
        self._got_ref = None
        self._parser.reset()
        self._send_and_await(b"AT" + CR, _Phase.AWAIT_AT)

    def _send_and_await(self, data: bytes, phase: _Phase) -> None:
        self._phase = phase
        self._timeout_id = self._clock.arm_timer(RESPONSE_TIMEOUT_S, ("sms_timeout",))
        self._write(data)

    def _write(self, data: bytes) -> None:
        self._transcript.add(">", data)
        reply = self._modem.step(data)
        if reply:
            self._transcript.add("<", reply)
            for token in self._parser.feed(reply):
                self._on_token(token)

    def _cancel_timeout(self) -> None:
        if self._timeout_id is not None:
            self._clock.cancel_timer(self._timeout_id)
            self._timeout_id = None

    def _on_token(self, token: Token) -> None:
        if self._current is None:
            return
        if token.kind is TokKind.ERROR:
            self._attempt_failed("MODEM_ERROR")
            return
        if self._phase is _Phase.AWAIT_AT and token.kind is TokKind.OK:
            self._cancel_timeout()
            self._send_and_await(b"AT+CMGF=1" + CR, _Phase.AWAIT_CMGF)
        elif self._phase is _Phase.AWAIT_CMGF and token.kind is TokKind.OK:
            self._cancel_timeout()
            cmd = f'AT+CMGS="{self._current.msg.recipient_number}"'.encode("ascii")
            self._send_and_await(cmd + CR, _Phase.AWAIT_PROMPT)
        elif self._phase is _Phase.AWAIT_PROMPT and token.kind is TokKind.PROMPT:
            self._cancel_timeout()
            self._send_and_await(self._current.msg.body.encode("ascii") + SUB, _Phase.AWAIT_SENT)
        elif self._phase is _Phase.AWAIT_SENT and token.kind is TokKind.CMGS_REF:
            self._got_ref = token.value
        elif self._phase is _Phase.AWAIT_SENT and token.kind is TokKind.OK and self._got_ref is not None:
            self._cancel_timeout()
            self._complete(SendOutcome(True, ref=self._got_ref, attempts=self._attempts))
        # other tokens are line noise; the timeout covers a wedged dialogue

    def on_timeout(self, timer_id: int) -> None:
        """Route a fired ("sms_timeout",) timer here."""
        if timer_id != self._timeout_id or self._current is None:
            return
        self._timeout_id = None
        self._attempt_failed("TIMEOUT")

    def _attempt_failed(self, reason: str) -> None:
        self._cancel_timeout()
        if self._attempts < self._max_attempts:
            self._start_attempt()
        else:
            self._complete(SendOutcome(False, reason=reason, attempts=self._attempts))

    def _complete(self, outcome: SendOutcome) -> None:
        done = self._current
        self._current = None
        self._phase = _Phase.IDLE
        self._on_complete(done.label, done.msg, outcome)
        if self._queue and self._current is None:
            self._start_next()


def send_sms(msg: SmsMessage, clock, modem: SimModem, transcript: Transcript, retries: int) -> SendOutcome:
    """One-shot blocking-style send; the clock still times out silent modems.

    Convenience wrapper over SmsDriver for direct use and tests.
    """
    results: list[SendOutcome] = []
    driver = SmsDriver(clock, modem, transcript, lambda label, m, outcome: results.append(outcome))
    if driver.busy:
        raise DriverBusyError("driver already has a send in flight")
    driver.request_send(msg, "DIRECT", retries)
    # A silent modem leaves timeout timers pending on the virtual clock.
    while not results:
        fired = clock.advance(RESPONSE_TIMEOUT_S)
        if not fired:
            break
        for f in fired:
            if f.tag == ("sms_timeout",):
                driver.on_timeout(f.timer_id)
    return results[0] if results else SendOutcome(False, reason="TIMEOUT", attempts=0)

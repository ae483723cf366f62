"""Append-only adherence log: newline-delimited records, CSV export, verification."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .domain import WallTime, format_walltime, parse_walltime
from .errors import TimeRegressionError


class RecordKind(Enum):
    DOSE_DUE = "DOSE_DUE"
    RING_START = "RING_START"
    SNOOZE_START = "SNOOZE_START"
    SMS_REQUESTED = "SMS_REQUESTED"
    SMS_SENT = "SMS_SENT"
    SMS_FAILED = "SMS_FAILED"
    TAKEN = "TAKEN"
    MISSED = "MISSED"
    LID_OPEN = "LID_OPEN"
    LID_CLOSE = "LID_CLOSE"
    UNSCHEDULED_OPEN = "UNSCHEDULED_OPEN"
    WRONG_COMPARTMENT = "WRONG_COMPARTMENT"
    DOSE_DROPPED = "DOSE_DROPPED"
    TIME_SET = "TIME_SET"


# Fields each kind must carry, beyond seq/at/kind.
REQUIRED_FIELDS: dict[RecordKind, tuple[str, ...]] = {
    RecordKind.DOSE_DUE: ("slot", "compartment"),
    RecordKind.RING_START: ("slot",),
    RecordKind.SNOOZE_START: ("slot",),
    RecordKind.SMS_REQUESTED: ("slot", "recipient"),
    RecordKind.SMS_SENT: ("recipient", "sms_ref", "attempts"),
    RecordKind.SMS_FAILED: ("recipient", "reason", "attempts"),
    RecordKind.TAKEN: ("slot", "compartment"),
    RecordKind.MISSED: ("slot", "compartment"),
    RecordKind.LID_OPEN: ("compartment",),
    RecordKind.LID_CLOSE: ("compartment",),
    RecordKind.UNSCHEDULED_OPEN: ("compartment",),
    RecordKind.WRONG_COMPARTMENT: ("slot", "compartment"),
    RecordKind.DOSE_DROPPED: ("slot", "reason"),
    RecordKind.TIME_SET: ("old", "new"),
}

# Canonical key order inside serialized records; keeps files byte-stable.
_FIELD_ORDER = ("slot", "compartment", "recipient", "sms_ref", "attempts", "reason", "old", "new")


@dataclass(frozen=True)
class LogRecord:
    seq: int
    at: WallTime
    kind: RecordKind
    fields: Mapping[str, object]

    def field(self, name: str):
        return self.fields.get(name)


def record_to_json(rec: LogRecord) -> str:
    obj: dict[str, object] = {"seq": rec.seq, "at": format_walltime(rec.at), "kind": rec.kind.value}
    for key in _FIELD_ORDER:
        if key in rec.fields:
            obj[key] = rec.fields[key]
    return json.dumps(obj, separators=(",", ":"))


def record_from_json(line: str) -> LogRecord:
    obj = json.loads(line)
    seq = obj.pop("seq")
    at = parse_walltime(obj.pop("at"))
    kind = RecordKind(obj.pop("kind"))
    return LogRecord(seq, at, kind, obj)


@dataclass(frozen=True)
class LogViolation:
    seq: int
    message: str


class LogStore:
    """Single-writer append-only store, optionally persisted line-per-record."""

    def __init__(self, path: str | Path | None = None):
        self._records: list[LogRecord] = []
        self._last_at: WallTime | None = None
        self._file = open(path, "a", encoding="utf-8") if path else None
        self._path = Path(path) if path else None

    @property
    def records(self) -> list[LogRecord]:
        return list(self._records)

    @property
    def path(self) -> Path | None:
        return self._path

    def append(self, kind: RecordKind, at: WallTime, fields: Mapping[str, object]) -> int:
        """Persist one record and return its assigned seq.

        Timestamps must be nondecreasing; a TIME_SET record re-baselines the
        check (the device clock may have been set backward). Storage errors
        surface as OSError.
        """
        missing = [f for f in REQUIRED_FIELDS[kind] if f not in fields]
        if missing:
            raise ValueError(f"{kind.value} record missing fields: {', '.join(missing)}")
        if kind is not RecordKind.TIME_SET and self._last_at is not None and at < self._last_at:
            raise TimeRegressionError(
                f"{kind.value} at {format_walltime(at)} precedes last record at {format_walltime(self._last_at)}"
            )
        rec = LogRecord(len(self._records) + 1, at, kind, dict(fields))
        if self._file:
            self._file.write(record_to_json(rec) + "\n")
            self._file.flush()
            os.fsync(self._file.fileno())
        self._records.append(rec)
        self._last_at = at
        return rec.seq

    def query(
        self,
        kinds: Iterable[RecordKind] | None = None,
        slot: str | None = None,
        start: WallTime | None = None,
        end: WallTime | None = None,
    ) -> list[LogRecord]:
        """Records matching every provided criterion, in seq order."""
        kindset = set(kinds) if kinds is not None else None
        out = []
        for rec in self._records:
            if kindset is not None and rec.kind not in kindset:
                continue
            if slot is not None and rec.field("slot") != slot:
                continue
            if start is not None and rec.at < start:
                continue
            if end is not None and rec.at >= end:
                continue
            out.append(rec)
        return out

    def close(self) -> None:
        if self._file:
            self._file.close()
            self._file = None


def read_log(path: str | Path) -> list[LogRecord]:
    with open(path, encoding="utf-8") as f:
        return [record_from_json(line) for line in f if line.strip()]


CSV_HEADER = ("seq", "at", "kind", "slot", "compartment", "recipient", "detail")

_DETAIL_KEYS = ("sms_ref", "attempts", "reason", "old", "new")


def _record_row(rec: LogRecord) -> list[str]:
    detail = " ".join(f"{k}={rec.fields[k]}" for k in _DETAIL_KEYS if k in rec.fields)
    return [
        str(rec.seq),
        format_walltime(rec.at),
        rec.kind.value,
        str(rec.field("slot") or ""),
        str(rec.field("compartment") or ""),
        str(rec.field("recipient") or ""),
        detail,
    ]


def export_csv(records: Iterable[LogRecord], start: WallTime | None = None, end: WallTime | None = None) -> str:
    """RFC-4180 document with a fixed column order."""
    rows = [list(CSV_HEADER)]
    for rec in records:
        if start is not None and rec.at < start:
            continue
        if end is not None and rec.at >= end:
            continue
        rows.append(_record_row(rec))
    return export_csv_rows(rows)


def export_csv_rows(rows: Iterable[Iterable[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerows(rows)
    return buf.getvalue()


def parse_csv(text: str) -> list[list[str]]:
    return [row for row in csv.reader(io.StringIO(text))]


def verify(path: str | Path) -> LogViolation | None:
    """Re-check a persisted log: seq contiguity, time monotonicity, field completeness.

    Returns the first violation found, or None when the log is sound.
    """
    try:
        records = read_log(path)
    except (ValueError, KeyError) as e:
        return LogViolation(0, f"unparseable log: {e}")
    last_at: WallTime | None = None
    for i, rec in enumerate(records, start=1):
        if rec.seq != i:
            return LogViolation(rec.seq, f"seq gap: expected {i}, found {rec.seq}")
        if rec.kind is RecordKind.TIME_SET:
            last_at = rec.at
        else:
            if last_at is not None and rec.at < last_at:
                return LogViolation(rec.seq, f"timestamp regression at seq {rec.seq}")
            last_at = rec.at
        missing = [f for f in REQUIRED_FIELDS[rec.kind] if f not in rec.fields]
        if missing:
            return LogViolation(rec.seq, f"{rec.kind.value} missing fields: {', '.join(missing)}")
    return None

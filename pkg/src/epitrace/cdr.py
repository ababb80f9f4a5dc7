"""CDR ingestion: parse, validate, window-filter and normalize call-data records.

A CDR file is a comma-delimited UTF-8 table with a header row naming eight
columns (order-insensitive, case-insensitive): Date & Time, A party, B party,
Call Type, IMEI, Cell Site, Latitude, Longitude. A Duration column is parsed
when present; a Cost column is parsed and ignored.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import BinaryIO, Iterable, Sequence


class CallType(str, Enum):
    CALL_INCOMING = "Call Incoming"
    CALL_OUTGOING = "Call Outgoing"
    SMS_INCOMING = "SMS Incoming"
    SMS_OUTGOING = "SMS Outgoing"

    @property
    def outgoing(self) -> bool:
        return self in (CallType.CALL_OUTGOING, CallType.SMS_OUTGOING)

    @property
    def sms(self) -> bool:
        return self in (CallType.SMS_INCOMING, CallType.SMS_OUTGOING)


_CALL_TYPE_LOOKUP = {v.value.lower(): v for v in CallType}

# Header captions, normalized to lowercase with collapsed whitespace.
_REQUIRED_COLUMNS = (
    "date & time",
    "a party",
    "b party",
    "call type",
    "imei",
    "cell site",
    "latitude",
    "longitude",
)
_OPTIONAL_COLUMNS = ("duration", "cost")


class IngestError(ValueError):
    """Fatal ingest failure: unreadable source or broken schema."""


class SchemaError(IngestError):
    """Header row is missing a mandatory column."""


@dataclass(frozen=True)
class CdrRecord:
    """One parsed CDR row (naive operator-local time, tower coordinates)."""

    timestamp: datetime
    a_party: str
    b_party: str
    call_type: CallType
    imei: str | None
    cell_site: str
    latitude: float
    longitude: float
    duration_seconds: int | None = None

    def sort_key(self) -> tuple:
        return (self.timestamp, self.b_party, self.call_type.value)


@dataclass(frozen=True)
class TimeWindow:
    """Closed [start, end] interval of naive local date-times."""

    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"window start {self.start} is after end {self.end}")

    def contains(self, ts: datetime) -> bool:
        return self.start <= ts <= self.end

    @classmethod
    def ending_at(cls, end: datetime, days: int = 14) -> "TimeWindow":
        """Default investigation window: `days` (14) ending at case-open time."""
        from datetime import timedelta

        return cls(start=end - timedelta(days=days), end=end)


@dataclass(frozen=True)
class CsvDialect:
    """Parsing options: delimiter and day/month order of the date column."""

    delimiter: str = ","
    date_order: str = "mdy"  # "mdy" or "dmy"

    @property
    def timestamp_format(self) -> str:
        return "%m/%d/%Y %H:%M:%S" if self.date_order == "mdy" else "%d/%m/%Y %H:%M:%S"


@dataclass(frozen=True)
class RowDiagnostic:
    """A rejected data row: 1-based row index plus the reasons."""

    row: int
    reason: str

    def __str__(self) -> str:
        return f"{self.reason} at row {self.row}"


def _normalize_header(name: str) -> str:
    return " ".join(name.strip().lower().split())


def _parse_party(value: str, label: str, errors: list[str]) -> str:
    value = value.strip()
    if not value:
        errors.append(f"{label} is empty")
    elif not value.isdigit() or not 10 <= len(value) <= 15:
        errors.append(f"{label} must be 10-15 decimal digits, got {value!r}")
    return value


def _parse_row(
    row: dict[str, str], index: int, dialect: CsvDialect
) -> CdrRecord | RowDiagnostic:
    errors: list[str] = []

    raw_ts = row["date & time"].strip()
    timestamp = None
    try:
        timestamp = datetime.strptime(raw_ts, dialect.timestamp_format)
    except ValueError:
        errors.append(f"unparseable date {raw_ts!r}")

    a_party = _parse_party(row["a party"], "a_party", errors)
    b_party = _parse_party(row["b party"], "b_party", errors)
    if a_party and a_party == b_party:
        errors.append("a_party and b_party are identical")

    raw_type = row["call type"].strip()
    call_type = _CALL_TYPE_LOOKUP.get(" ".join(raw_type.lower().split()))
    if call_type is None:
        errors.append(f"unknown call type {raw_type!r}")

    # 13 digits allowed: operator exports often truncate the check digit
    imei: str | None = row["imei"].strip() or None
    if imei is not None and (not imei.isdigit() or not 13 <= len(imei) <= 16):
        errors.append(f"imei must be 13-16 decimal digits, got {imei!r}")

    latitude = longitude = 0.0
    try:
        latitude = float(row["latitude"].strip())
        if not -90.0 <= latitude <= 90.0:
            errors.append("latitude out of range")
    except ValueError:
        errors.append(f"bad latitude {row['latitude']!r}")
    try:
        longitude = float(row["longitude"].strip())
        if not -180.0 <= longitude <= 180.0:
            errors.append("longitude out of range")
    except ValueError:
        errors.append(f"bad longitude {row['longitude']!r}")

    duration: int | None = None
    raw_duration = row.get("duration", "").strip()
    if raw_duration:
        try:
            duration = int(raw_duration)
            if duration < 0:
                errors.append("duration must be non-negative")
        except ValueError:
            errors.append(f"bad duration {raw_duration!r}")

    if errors:
        return RowDiagnostic(row=index, reason="; ".join(errors))
    assert timestamp is not None and call_type is not None
    return CdrRecord(
        timestamp=timestamp,
        a_party=a_party,
        b_party=b_party,
        call_type=call_type,
        imei=imei,
        cell_site=row["cell site"].strip(),
        latitude=latitude,
        longitude=longitude,
        duration_seconds=duration,
    )


def parse_cdr_file(
    source: bytes | str | BinaryIO,
    dialect: CsvDialect = CsvDialect(),
) -> tuple[list[CdrRecord], list[RowDiagnostic]]:
    """Parse a CDR table into records plus per-row diagnostics.

    Well-formed rows become records in input order; malformed rows are
    reported (row index, reason) and excluded, never silently dropped, so
    len(records) + len(diagnostics) equals the number of data rows.

    Raises IngestError for an unreadable source and SchemaError when a
    mandatory column is missing from the header.
    """
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        data = source.encode("utf-8")
    else:
        data = source.read()
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise IngestError(f"source is not valid UTF-8: {exc}") from None

    reader = csv.reader(
        io.StringIO(text), delimiter=dialect.delimiter, skipinitialspace=True
    )
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("source has no header row") from None

    positions: dict[str, int] = {}
    for i, name in enumerate(header):
        positions.setdefault(_normalize_header(name), i)
    missing = [c for c in _REQUIRED_COLUMNS if c not in positions]
    if missing:
        raise SchemaError(f"missing mandatory column(s): {', '.join(missing)}")

    records: list[CdrRecord] = []
    diagnostics: list[RowDiagnostic] = []
    known = _REQUIRED_COLUMNS + _OPTIONAL_COLUMNS
    index = 0
    for raw in reader:
        if not raw or all(not cell.strip() for cell in raw):
            continue  # blank line, not a data row
        index += 1
        row = {
            name: raw[positions[name]]
            if name in positions and positions[name] < len(raw)
            else ""
            for name in known
        }
        parsed = _parse_row(row, index, dialect)
        if isinstance(parsed, RowDiagnostic):
            diagnostics.append(parsed)
        else:
            records.append(parsed)
    return records, diagnostics


def parse_window_text(text: str) -> TimeWindow:
    """Parse "START..END" with ISO dates or date-times.

    A date-only START means midnight; a date-only END means 23:59:59, so
    "2020-05-01..2020-05-07" covers the whole of May 7 (closed window).
    """
    start_text, sep, end_text = text.partition("..")
    if not sep or not start_text or not end_text:
        raise IngestError(f"window {text!r} must look like START..END")

    def parse_side(side: str, end_of_day: bool) -> datetime:
        side = side.strip()
        try:
            ts = datetime.fromisoformat(side)
        except ValueError:
            raise IngestError(f"bad window bound {side!r}") from None
        date_only = len(side) == 10
        if date_only and end_of_day:
            ts = ts.replace(hour=23, minute=59, second=59)
        return ts

    return TimeWindow(
        start=parse_side(start_text, end_of_day=False),
        end=parse_side(end_text, end_of_day=True),
    )


def filter_window(records: Iterable[CdrRecord], window: TimeWindow) -> list[CdrRecord]:
    """Keep exactly the records whose timestamp lies inside the closed window."""
    return [r for r in records if window.contains(r.timestamp)]


def normalize_records(records: Iterable[CdrRecord]) -> list[CdrRecord]:
    """Sort by (timestamp, b_party, call_type) and drop exact duplicates."""
    seen: set[CdrRecord] = set()
    out: list[CdrRecord] = []
    for record in sorted(records, key=CdrRecord.sort_key):
        if record not in seen:
            seen.add(record)
            out.append(record)
    return out


_CANONICAL_HEADER = (
    "Date & Time",
    "A party",
    "B party",
    "Call Type",
    "IMEI",
    "Cell Site",
    "Latitude",
    "Longitude",
)


def _format_float(value: float) -> str:
    # repr keeps the shortest round-tripping decimal form
    return repr(value)


def to_canonical_csv(
    records: Sequence[CdrRecord], dialect: CsvDialect = CsvDialect()
) -> str:
    """Serialize records to the canonical CSV dialect (reparse round-trips).

    The Duration column is emitted only when some record carries one, keeping
    the canonical form of duration-free sources at the eight Table columns.
    """
    with_duration = any(r.duration_seconds is not None for r in records)
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=dialect.delimiter, lineterminator="\n")
    header = list(_CANONICAL_HEADER) + (["Duration"] if with_duration else [])
    writer.writerow(header)
    for r in records:
        row = [
            r.timestamp.strftime(dialect.timestamp_format),
            r.a_party,
            r.b_party,
            r.call_type.value,
            r.imei or "",
            r.cell_site,
            _format_float(r.latitude),
            _format_float(r.longitude),
        ]
        if with_duration:
            row.append("" if r.duration_seconds is None else str(r.duration_seconds))
        writer.writerow(row)
    return buf.getvalue()


def diagnostics_report(diagnostics: Sequence[RowDiagnostic]) -> str:
    """Line-delimited diagnostics, one rejected row per line."""
    return "".join(f"{d}\n" for d in diagnostics)


def record_to_json(record: CdrRecord) -> dict:
    """JSON-able dict form used in audit events and the event log."""
    doc = {
        "ts": record.timestamp.isoformat(sep=" "),
        "a": record.a_party,
        "b": record.b_party,
        "type": record.call_type.value,
        "imei": record.imei,
        "site": record.cell_site,
        "lat": record.latitude,
        "lon": record.longitude,
    }
    if record.duration_seconds is not None:
        doc["dur"] = record.duration_seconds
    return doc


def record_from_json(doc: dict) -> CdrRecord:
    return CdrRecord(
        timestamp=datetime.fromisoformat(doc["ts"]),
        a_party=doc["a"],
        b_party=doc["b"],
        call_type=CallType(doc["type"]),
        imei=doc.get("imei"),
        cell_site=doc["site"],
        latitude=doc["lat"],
        longitude=doc["lon"],
        duration_seconds=doc.get("dur"),
    )

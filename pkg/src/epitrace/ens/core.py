"""Exposure-notification protocol: rotating keys, local logs, key registry.

Matching is strictly device-local: encounter logs never leave the device,
and the registry only ever holds diagnosis keys with validity windows —
no sighting times, no locations. The 4-digit default keyspace is
paper-faithful; the false-match helper quantifies why real deployments
need far more entropy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence

DEFAULT_KEY_DIGITS = 4
ROTATION_MINUTES = (10, 20)  # default rotation range, inclusive
COALESCE_MINUTES = ROTATION_MINUTES[1]  # a key cannot outlive one rotation
DEFAULT_MIN_MATCH_MINUTES = 10.0
RETENTION_DAYS = 14


class EnsError(ValueError):
    pass


@dataclass(frozen=True)
class EphemeralKey:
    value: str
    valid_from: datetime
    valid_to: datetime

    def __post_init__(self) -> None:
        if not self.value or not self.value.isdigit():
            raise EnsError(f"key value {self.value!r} is not a digit string")
        if self.valid_from >= self.valid_to:
            raise EnsError("key validity window is empty")

    def active_at(self, at: datetime) -> bool:
        # half-open window: exactly one key is active at a rotation boundary
        return self.valid_from <= at < self.valid_to


@dataclass(frozen=True)
class EncounterRecord:
    observed_key: str
    first_seen: datetime
    last_seen: datetime

    def __post_init__(self) -> None:
        if self.first_seen > self.last_seen:
            raise EnsError("encounter first_seen is after last_seen")

    @property
    def cumulative_minutes(self) -> float:
        return (self.last_seen - self.first_seen).total_seconds() / 60.0


@dataclass(frozen=True)
class EncounterLog:
    """Device-local sighting log; this value never enters the registry."""

    records: tuple[EncounterRecord, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def total_minutes(self) -> float:
        return sum(r.cumulative_minutes for r in self.records)


@dataclass(frozen=True)
class RegistryEntry:
    key_value: str
    valid_from: datetime
    valid_to: datetime
    uploaded_at: datetime


@dataclass(frozen=True)
class KeyRegistry:
    """Append-only diagnosis-key registry (the cloud side of the protocol)."""

    entries: tuple[RegistryEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def snapshot(self, now: datetime | None = None) -> "KeyRegistry":
        """Retention view: entries whose validity ended ≤14 days ago."""
        if now is None:
            return self
        horizon = now - timedelta(days=RETENTION_DAYS)
        return KeyRegistry(
            entries=tuple(e for e in self.entries if e.valid_to >= horizon)
        )


@dataclass(frozen=True)
class DiagnosisUpload:
    keys: tuple[EphemeralKey, ...]
    verification_token: str
    uploaded_at: datetime

    def __post_init__(self) -> None:
        if not self.keys:
            raise EnsError("diagnosis upload has no keys")
        if not self.verification_token:
            raise EnsError("diagnosis upload has no verification token")


@dataclass(frozen=True)
class ExposureNotification:
    matched_key: str
    exposure_start: datetime
    exposure_end: datetime
    cumulative_minutes: float

    def __post_init__(self) -> None:
        if self.cumulative_minutes <= 0:
            raise EnsError("exposure must have positive cumulative minutes")


def generate_key_schedule(
    seed: int | str | random.Random,
    horizon_minutes: float,
    k: int = DEFAULT_KEY_DIGITS,
    rotation_minutes: tuple[int, int] = ROTATION_MINUTES,
    start: datetime | None = None,
) -> list[EphemeralKey]:
    """Contiguous key windows tiling [start, start + horizon] exactly.

    Window lengths are uniform integer-second draws from the rotation range;
    the last one or two windows are clamped so the tiling comes out exact
    (still within the range). Values are uniform over the 10^k keyspace.
    """
    if k < 1:
        raise EnsError("key length must be at least 1 digit")
    lo, hi = rotation_minutes
    if not 0 < lo <= hi:
        raise EnsError(f"bad rotation range {rotation_minutes}")
    if horizon_minutes < 0:
        raise EnsError("horizon must be non-negative")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    if start is None:
        start = datetime.now()

    lo_s, hi_s = int(lo * 60), int(hi * 60)
    remaining = round(horizon_minutes * 60)
    schedule: list[EphemeralKey] = []
    cursor = start
    while remaining > 0:
        if remaining <= hi_s:
            length = remaining
        else:
            length = rng.randint(lo_s, hi_s)
            if 0 < remaining - length < lo_s:
                length = remaining - lo_s  # keep the tail long enough to tile
        if not lo_s <= length <= hi_s:
            raise EnsError(
                f"horizon {horizon_minutes} min cannot be tiled by "
                f"rotation range {rotation_minutes}"
            )
        value = f"{rng.randrange(10 ** k):0{k}d}"
        schedule.append(
            EphemeralKey(
                value=value,
                valid_from=cursor,
                valid_to=cursor + timedelta(seconds=length),
            )
        )
        cursor += timedelta(seconds=length)
        remaining -= length
    return schedule


def active_key(schedule: Sequence[EphemeralKey], at: datetime) -> EphemeralKey | None:
    for key in schedule:
        if key.active_at(at):
            return key
    return None


def record_encounter(
    log: EncounterLog, observed_key: str, at: datetime
) -> EncounterLog:
    """Append a sighting, coalescing repeats of a key seen ≤20 min ago."""
    if not observed_key or not observed_key.isdigit():
        raise EnsError(f"malformed key {observed_key!r}")
    window = timedelta(minutes=COALESCE_MINUTES)
    records = list(log.records)
    for i in range(len(records) - 1, -1, -1):
        r = records[i]
        if r.observed_key != observed_key:
            continue
        if timedelta(0) <= at - r.last_seen <= window:
            records[i] = EncounterRecord(
                observed_key=observed_key,
                first_seen=r.first_seen,
                last_seen=at,
            )
            return EncounterLog(records=tuple(records))
        break  # most recent sighting of this key is too old: start fresh
    records.append(
        EncounterRecord(observed_key=observed_key, first_seen=at, last_seen=at)
    )
    return EncounterLog(records=tuple(records))


def publish_diagnosis(
    registry: KeyRegistry, upload: DiagnosisUpload
) -> tuple[KeyRegistry, list[str]]:
    """Append the upload's keys; returns (registry, exclusion diagnostics).

    Keys whose validity ended more than 14 days before the upload are
    excluded (retention horizon) with a diagnostic line each.
    """
    horizon = upload.uploaded_at - timedelta(days=RETENTION_DAYS)
    entries = list(registry.entries)
    diagnostics: list[str] = []
    for key in upload.keys:
        if key.valid_to < horizon:
            diagnostics.append(
                f"key {key.value} expired {key.valid_to.isoformat(sep=' ')}: "
                f"outside the {RETENTION_DAYS}-day retention horizon"
            )
            continue
        entries.append(
            RegistryEntry(
                key_value=key.value,
                valid_from=key.valid_from,
                valid_to=key.valid_to,
                uploaded_at=upload.uploaded_at,
            )
        )
    return KeyRegistry(entries=tuple(entries)), diagnostics


def match_exposures(
    log: EncounterLog,
    published: KeyRegistry,
    min_minutes: float = DEFAULT_MIN_MATCH_MINUTES,
) -> list[ExposureNotification]:
    """Pure device-local read: no network effect, no registry mutation.

    One notification per encounter record whose key appears in the registry
    with overlapping validity and cumulative contact ≥ min_minutes.
    """
    by_key: dict[str, list[RegistryEntry]] = {}
    for entry in published.entries:
        by_key.setdefault(entry.key_value, []).append(entry)
    notifications: list[ExposureNotification] = []
    for record in log.records:
        minutes = record.cumulative_minutes
        if minutes < min_minutes or minutes <= 0:
            continue
        overlapping = any(
            entry.valid_from <= record.last_seen
            and record.first_seen <= entry.valid_to
            for entry in by_key.get(record.observed_key, ())
        )
        if overlapping:
            notifications.append(
                ExposureNotification(
                    matched_key=record.observed_key,
                    exposure_start=record.first_seen,
                    exposure_end=record.last_seen,
                    cumulative_minutes=minutes,
                )
            )
    return notifications


def false_match_probability(k: int, published_keys: int) -> float:
    """P(a random observed key collides with ≥1 of m published keys)."""
    return 1.0 - (1.0 - 10.0 ** (-k)) ** published_keys


# --- serialization (privacy-reviewed: key values + windows only) ---------


def upload_to_doc(upload: DiagnosisUpload) -> dict:
    return {
        "keys": [
            {
                "key": key.value,
                "from": key.valid_from.isoformat(sep=" "),
                "to": key.valid_to.isoformat(sep=" "),
            }
            for key in upload.keys
        ],
        "token": upload.verification_token,
        "uploaded_at": upload.uploaded_at.isoformat(sep=" "),
    }


def upload_from_doc(doc: dict) -> DiagnosisUpload:
    return DiagnosisUpload(
        keys=tuple(
            EphemeralKey(
                value=k["key"],
                valid_from=datetime.fromisoformat(k["from"]),
                valid_to=datetime.fromisoformat(k["to"]),
            )
            for k in doc["keys"]
        ),
        verification_token=doc["token"],
        uploaded_at=datetime.fromisoformat(doc["uploaded_at"]),
    )


def registry_to_doc(registry: KeyRegistry) -> list[dict]:
    return [
        {
            "key": e.key_value,
            "from": e.valid_from.isoformat(sep=" "),
            "to": e.valid_to.isoformat(sep=" "),
            "uploaded_at": e.uploaded_at.isoformat(sep=" "),
        }
        for e in registry.entries
    ]


def registry_from_doc(docs: Sequence[dict]) -> KeyRegistry:
    return KeyRegistry(
        entries=tuple(
            RegistryEntry(
                key_value=d["key"],
                valid_from=datetime.fromisoformat(d["from"]),
                valid_to=datetime.fromisoformat(d["to"]),
                uploaded_at=datetime.fromisoformat(d["uploaded_at"]),
            )
            for d in docs
        )
    )


def notification_to_doc(n: ExposureNotification) -> dict:
    return {
        "matched_key": n.matched_key,
        "start": n.exposure_start.isoformat(sep=" "),
        "end": n.exposure_end.isoformat(sep=" "),
        "minutes": round(n.cumulative_minutes, 6),
    }

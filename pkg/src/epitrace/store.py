"""Event-sourced file store: append-only JSON-line logs + full replay.

Every accepted mutation is appended, flushed, and fsynced before the caller
acknowledges it; in-memory state is always reconstructible by replaying the
logs (a torn final line from a crash mid-append is discarded). Cases are
independent, so writers serialize per case, not globally.
"""

from __future__ import annotations

import json
import os
import threading
from collections import defaultdict
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

from .cdr import CdrRecord, TimeWindow, filter_window, normalize_records, record_from_json
from . import investigation as inv
from .ens.core import (
    DiagnosisUpload,
    KeyRegistry,
    publish_diagnosis,
    registry_to_doc,
    upload_from_doc,
    upload_to_doc,
)
from .geopath import PathTrace, advisory_to_doc, publish_advisory, reconstruct_path
from .quarantine import (
    LocationPing,
    QuarantineMonitor,
    QuarantineTag,
    ViolationAlert,
    alert_to_doc,
)


class StoreError(ValueError):
    pass


def _dump_line(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def _append_batch(path: Path, docs: Sequence[dict]) -> None:
    """One durable append: a single write of all lines, flushed and fsynced."""
    data = b"".join(_dump_line(d) for d in docs)
    with open(path, "ab") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())


def _read_log(path: Path) -> list[dict]:
    """Parse a JSON-lines log, tolerating a torn (crash-truncated) last line."""
    if not path.exists():
        return []
    raw = path.read_bytes()
    docs: list[dict] = []
    lines = raw.split(b"\n")
    terminated = raw.endswith(b"\n")
    for i, line in enumerate(lines):
        if not line:
            continue
        last = i == len(lines) - 1
        try:
            docs.append(json.loads(line))
        except json.JSONDecodeError:
            if last and not terminated:
                break  # torn final line: the write never completed
            raise StoreError(f"{path}: corrupt log line {i + 1}")
    return docs


def _case_filename(case_id: str) -> str:
    # case ids are caller-supplied; keep them filesystem-safe
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in case_id)
    return f"{safe}.log"


class CaseStore:
    """File-backed store for cases, ENS registry, quarantine, advisories."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.cases_dir = self.root / "cases"
        self.registry_log = self.root / "registry.log"
        self.quarantine_log = self.root / "quarantine.log"
        self.advisories_log = self.root / "advisories.log"
        self.alerts_export = self.root / "alerts.log"
        try:
            self.cases_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"store root {self.root} is not writable: {exc}") from exc

        self._locks_guard = threading.Lock()
        self._case_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._registry_lock = threading.Lock()
        self._quarantine_lock = threading.Lock()
        self._advisory_lock = threading.Lock()

        self.cases: dict[str, inv.InvestigationCase] = {}
        self.registry = KeyRegistry()
        self.registry_uploads = 0
        self.monitor = QuarantineMonitor()
        self.alerts: list[dict] = []
        self.advisories: list[dict] = []
        self._ping_count = 0
        self._replay()

    # --- replay -----------------------------------------------------------

    def _replay(self) -> None:
        for path in sorted(self.cases_dir.glob("*.log")):
            events = _read_log(path)
            if not events:
                continue
            case = inv.replay_audit(events)
            self.cases[case.case_id] = case
        for doc in _read_log(self.registry_log):
            upload = upload_from_doc(doc)
            self.registry, _ = publish_diagnosis(self.registry, upload)
            self.registry_uploads += 1
        for doc in _read_log(self.quarantine_log):
            if doc["op"] == "geo-tag":
                self.monitor.tag(_tag_from_doc(doc))
            elif doc["op"] == "ping":
                self._observe(_ping_from_doc(doc))
            else:
                raise StoreError(f"unknown quarantine op {doc['op']!r}")
        self.advisories = _read_log(self.advisories_log)

    def _observe(self, ping: LocationPing) -> ViolationAlert | None:
        """Feed a ping to the monitor; alerts are derived state with seq."""
        self._ping_count += 1
        alert = self.monitor.observe(ping)
        if alert is not None:
            doc = alert_to_doc(alert)
            doc["seq"] = len(self.alerts) + 1
            self.alerts.append(doc)
        return alert

    # --- cases ------------------------------------------------------------

    def _lock_for(self, case_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._case_locks[case_id]

    def _case_log(self, case_id: str) -> Path:
        return self.cases_dir / _case_filename(case_id)

    def _commit(self, before_len: int, case: inv.InvestigationCase) -> inv.InvestigationCase:
        new_events = case.audit[before_len:]
        if new_events:
            _append_batch(self._case_log(case.case_id), list(new_events))
        self.cases[case.case_id] = case
        return case

    def get_case(self, case_id: str) -> inv.InvestigationCase:
        try:
            return self.cases[case_id]
        except KeyError:
            raise KeyError(f"no such case {case_id}") from None

    def list_cases(self) -> list[str]:
        return sorted(self.cases)

    def open_case(
        self,
        index: str,
        records: Sequence[CdrRecord],
        window: TimeWindow,
        case_id: str | None = None,
        at: datetime | None = None,
    ) -> inv.InvestigationCase:
        case = inv.open_case(index, records, window, case_id=case_id, at=at)
        lock = self._lock_for(case.case_id)
        with lock:
            if case.case_id in self.cases or self._case_log(case.case_id).exists():
                raise StoreError(f"case {case.case_id} already exists")
            return self._commit(0, case)

    def confirm(
        self, case_id: str, patient: str, contacts: Iterable[str],
        at: datetime | None = None,
    ) -> inv.InvestigationCase:
        with self._lock_for(case_id):
            case = self.get_case(case_id)
            updated = inv.confirm_contacts(case, patient, contacts, at=at)
            return self._commit(len(case.audit), updated)

    def record_test(
        self, case_id: str, event: inv.TestEvent, at: datetime | None = None
    ) -> inv.InvestigationCase:
        with self._lock_for(case_id):
            case = self.get_case(case_id)
            updated = inv.record_test_result(case, event, at=at)
            return self._commit(len(case.audit), updated)

    def attach(
        self,
        case_id: str,
        patient: str,
        records: Sequence[CdrRecord],
        window: TimeWindow,
        at: datetime | None = None,
    ) -> inv.InvestigationCase:
        with self._lock_for(case_id):
            case = self.get_case(case_id)
            updated = inv.attach_cdra(case, patient, records, window, at=at)
            return self._commit(len(case.audit), updated)

    def merge_exposures(
        self,
        case_id: str,
        exposures: Sequence[inv.ResolvedExposure],
        at: datetime | None = None,
    ) -> inv.InvestigationCase:
        with self._lock_for(case_id):
            case = self.get_case(case_id)
            updated = inv.merge_exposure_contacts(case, exposures, at=at)
            return self._commit(len(case.audit), updated)

    def case_records(self, case_id: str, subscriber: str) -> list[CdrRecord]:
        """The window-filtered, normalized CDR of one focal in the case."""
        case = self.get_case(case_id)
        for event in case.audit:
            focal = event.get("index") if event["op"] == "open" else event.get("patient")
            if event["op"] in ("open", "attach") and focal == subscriber:
                window = TimeWindow(
                    start=datetime.fromisoformat(event["window"]["start"]),
                    end=datetime.fromisoformat(event["window"]["end"]),
                )
                records = [record_from_json(d) for d in event["records"]]
                return normalize_records(filter_window(records, window))
        raise KeyError(f"case {case_id} holds no CDR for {subscriber}")

    def case_path(self, case_id: str, subscriber: str) -> PathTrace:
        return reconstruct_path(self.case_records(case_id, subscriber))

    # --- ENS registry -------------------------------------------------------

    def publish_keys(self, upload: DiagnosisUpload) -> tuple[int, list[str]]:
        """Returns (accepted key count, exclusion diagnostics)."""
        with self._registry_lock:
            before = len(self.registry)
            registry, diagnostics = publish_diagnosis(self.registry, upload)
            _append_batch(self.registry_log, [upload_to_doc(upload)])
            self.registry = registry
            self.registry_uploads += 1
            return len(registry) - before, diagnostics

    def registry_entries(self, since: int = 0) -> list[dict]:
        docs = registry_to_doc(self.registry)
        out = []
        for seq, doc in enumerate(docs, start=1):
            if seq > since:
                doc["seq"] = seq
                out.append(doc)
        return out

    # --- quarantine ---------------------------------------------------------

    def add_tag(self, tag: QuarantineTag) -> dict:
        with self._quarantine_lock:
            _append_batch(self.quarantine_log, [_tag_to_doc(tag)])
            self.monitor.tag(tag)
            return _tag_to_doc(tag)

    def add_ping(self, ping: LocationPing) -> dict | None:
        """Returns the alert doc when this ping opens a violation episode."""
        with self._quarantine_lock:
            _append_batch(self.quarantine_log, [_ping_to_doc(ping)])
            alert = self._observe(ping)
            if alert is None:
                return None
            doc = self.alerts[-1]
            _append_batch(self.alerts_export, [doc])  # write-only mirror feed
            return doc

    def alerts_since(self, since: int = 0) -> list[dict]:
        return [a for a in self.alerts if a["seq"] > since]

    # --- advisories -----------------------------------------------------------

    def publish_case_advisory(
        self,
        case_id: str,
        subscriber: str,
        ttl_days: int,
        now: datetime | None = None,
    ) -> dict:
        path = self.case_path(case_id, subscriber)
        advisory = publish_advisory(path, ttl_days, now=now)
        doc = advisory_to_doc(advisory)
        with self._advisory_lock:
            _append_batch(self.advisories_log, [doc])
            self.advisories.append(doc)
        return doc

    def list_advisories(self) -> list[dict]:
        return list(self.advisories)

    # --- introspection ----------------------------------------------------------

    def stats(self) -> dict:
        """Replay-derived mutation counts (used by durability checks)."""
        return {
            "cases": {cid: len(c.audit) for cid, c in sorted(self.cases.items())},
            "registry_uploads": self.registry_uploads,
            "registry_keys": len(self.registry),
            "tags": len(self.monitor.audit),
            "pings": self._ping_count,
            "alerts": len(self.alerts),
            "advisories": len(self.advisories),
        }


def _tag_to_doc(tag: QuarantineTag) -> dict:
    return {
        "op": "geo-tag",
        "subscriber": tag.subscriber,
        "center_lat": tag.center_lat,
        "center_lon": tag.center_lon,
        "radius_m": tag.radius_m,
        "active_from": tag.active_from.isoformat(sep=" "),
        "active_to": tag.active_to.isoformat(sep=" "),
    }


def _tag_from_doc(doc: dict) -> QuarantineTag:
    return QuarantineTag(
        subscriber=doc["subscriber"],
        center_lat=doc["center_lat"],
        center_lon=doc["center_lon"],
        radius_m=doc["radius_m"],
        active_from=datetime.fromisoformat(doc["active_from"]),
        active_to=datetime.fromisoformat(doc["active_to"]),
    )


def _ping_to_doc(ping: LocationPing) -> dict:
    return {
        "op": "ping",
        "subscriber": ping.subscriber,
        "latitude": ping.latitude,
        "longitude": ping.longitude,
        "at": ping.at.isoformat(sep=" "),
    }


def _ping_from_doc(doc: dict) -> LocationPing:
    return LocationPing(
        subscriber=doc["subscriber"],
        latitude=doc["latitude"],
        longitude=doc["longitude"],
        at=datetime.fromisoformat(doc["at"]),
    )

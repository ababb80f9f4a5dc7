"""Iterative contact-trace loop: open a case, confirm, test, attach, merge.

The case is a pure value; every operation validates, emits audit events, and
returns a new case. apply_event is the only state mutator, so replaying the
audit log from scratch reproduces the final case byte-for-byte (canonical
JSON). Audit events therefore carry full payloads (including attached CDR
rows), never references.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

from .cdr import (
    CdrRecord,
    TimeWindow,
    filter_window,
    normalize_records,
    record_from_json,
    record_to_json,
)
from .graph import ContactGraph, NodeStatus, build_graph, graph_to_json_doc, merge_graphs

CASE_SCHEMA = "epitrace.case/1"


class CaseError(ValueError):
    pass


class TestResult(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


@dataclass(frozen=True)
class TestEvent:
    subscriber: str
    result: TestResult
    reported_at: datetime


@dataclass(frozen=True)
class ResolvedExposure:
    """An ENS match after consent-gated identity resolution.

    subscriber is None when the exposed device did not consent (or has no
    directory entry); such exposures are skipped with an audit diagnostic.
    patient anchors the proximity edge and defaults to the index patient.
    """

    subscriber: str | None
    exposure_start: datetime
    exposure_end: datetime
    cumulative_minutes: float
    patient: str | None = None


@dataclass(frozen=True)
class InvestigationCase:
    case_id: str
    index: str
    web: ContactGraph
    pending_cdra: tuple[str, ...]
    cdra_done: frozenset[str]
    test_log: tuple[TestEvent, ...]
    audit: tuple[dict, ...]

    def __post_init__(self) -> None:
        for subscriber in self.pending_cdra:
            if self.web.status_of(subscriber) != NodeStatus.PATIENT:
                raise CaseError(f"pending CDRA for non-Patient {subscriber}")

    @property
    def closed(self) -> bool:
        return not self.pending_cdra


def _iso(ts: datetime) -> str:
    return ts.isoformat(sep=" ")


def _window_doc(window: TimeWindow) -> dict:
    return {"start": _iso(window.start), "end": _iso(window.end)}


def _window_from_doc(doc: dict) -> TimeWindow:
    return TimeWindow(
        start=datetime.fromisoformat(doc["start"]),
        end=datetime.fromisoformat(doc["end"]),
    )


def _stamp(case: InvestigationCase | None, op: str, at: datetime, **fields) -> dict:
    seq = 1 if case is None else len(case.audit) + 1
    event = {"seq": seq, "at": _iso(at), "op": op}
    event.update(fields)
    return event


def apply_event(case: InvestigationCase | None, event: dict) -> InvestigationCase:
    """Fold one audit event into the case. The sole state mutator."""
    op = event["op"]
    if op == "open":
        if case is not None:
            raise CaseError("open event on an already-open case")
        window = _window_from_doc(event["window"])
        records = [record_from_json(doc) for doc in event["records"]]
        usable = normalize_records(filter_window(records, window))
        web = build_graph(event["index"], usable)
        return InvestigationCase(
            case_id=event["case_id"],
            index=event["index"],
            web=web,
            pending_cdra=(),
            cdra_done=frozenset({event["index"]}),
            test_log=(),
            audit=(event,),
        )
    if case is None:
        raise CaseError(f"{op} event before the open event")
    if event["seq"] != len(case.audit) + 1:
        raise CaseError(
            f"audit gap: expected seq {len(case.audit) + 1}, got {event['seq']}"
        )
    audit = case.audit + (event,)

    if op == "confirm":
        if event.get("subscriber") is None:  # empty confirmation set
            return replace(case, audit=audit)
        web = case.web
        if event["from"] != event["to"]:
            web = web.with_status(event["subscriber"], NodeStatus(event["to"]))
        return replace(case, web=web, audit=audit)

    if op == "test":
        test_event = TestEvent(
            subscriber=event["subscriber"],
            result=TestResult(event["result"]),
            reported_at=datetime.fromisoformat(event["reported_at"]),
        )
        web = case.web
        pending = case.pending_cdra
        if event["from"] != event["to"]:
            web = web.with_status(event["subscriber"], NodeStatus(event["to"]))
        if event["enqueued"]:
            pending = pending + (event["subscriber"],)
        return replace(
            case,
            web=web,
            pending_cdra=pending,
            test_log=case.test_log + (test_event,),
            audit=audit,
        )

    if op == "attach":
        patient = event["patient"]
        window = _window_from_doc(event["window"])
        records = [record_from_json(doc) for doc in event["records"]]
        usable = normalize_records(filter_window(records, window))
        web = merge_graphs(case.web, build_graph(patient, usable))
        pending = tuple(s for s in case.pending_cdra if s != patient)
        return replace(
            case,
            web=web,
            pending_cdra=pending,
            cdra_done=case.cdra_done | {patient},
            audit=audit,
        )

    if op == "exposure":
        if event.get("skipped"):
            return replace(case, audit=audit)
        subscriber = event["subscriber"]
        web = case.web.with_proximity_edge(
            event["patient"],
            subscriber,
            datetime.fromisoformat(event["start"]),
            datetime.fromisoformat(event["end"]),
        )
        if event["from"] != event["to"]:
            web = web.with_status(subscriber, NodeStatus(event["to"]))
        return replace(case, web=web, audit=audit)

    raise CaseError(f"unknown audit op {op!r}")


def open_case(
    index_patient: str,
    records: Sequence[CdrRecord],
    window: TimeWindow,
    *,
    case_id: str | None = None,
    at: datetime | None = None,
) -> InvestigationCase:
    if not index_patient:
        raise CaseError("index patient subscriber is empty")
    event = _stamp(
        None,
        "open",
        at or datetime.now(),
        case_id=case_id or f"case-{uuid.uuid4().hex[:12]}",
        index=index_patient,
        window=_window_doc(window),
        records=[record_to_json(r) for r in records],
    )
    return apply_event(None, event)


def confirm_contacts(
    case: InvestigationCase,
    patient: str,
    confirmed: Iterable[str],
    *,
    at: datetime | None = None,
) -> InvestigationCase:
    """Record the patient's interview admissions; only neighbors qualify."""
    if patient not in case.web.nodes:
        raise CaseError(f"patient {patient} is not in the web")
    if case.web.status_of(patient) != NodeStatus.PATIENT:
        raise CaseError(f"{patient} is not a Patient")
    neighbors = case.web.neighbors(patient)
    confirmed = sorted(set(confirmed))
    for subscriber in confirmed:
        if subscriber not in neighbors:
            raise CaseError(f"{subscriber} is not a contact of {patient}")
    at = at or datetime.now()
    if not confirmed:
        event = _stamp(case, "confirm", at, patient=patient, subscriber=None)
        return apply_event(case, event)
    for subscriber in confirmed:
        status = case.web.status_of(subscriber)
        to = NodeStatus.SUSPECT if status in (NodeStatus.UNKNOWN, NodeStatus.CLEARED) else status
        fields = {
            "patient": patient,
            "subscriber": subscriber,
            "from": status.value,
            "to": to.value,
        }
        if status == NodeStatus.CLEARED:
            fields["flag"] = "re-promotion"
        case = apply_event(case, _stamp(case, "confirm", at, **fields))
    return case


def record_test_result(
    case: InvestigationCase,
    event: TestEvent,
    *,
    at: datetime | None = None,
) -> InvestigationCase:
    if event.subscriber not in case.web.nodes:
        raise CaseError(f"{event.subscriber} is not in the web")
    status = case.web.status_of(event.subscriber)
    if event.result == TestResult.POSITIVE:
        to = NodeStatus.PATIENT
        duplicate = status == NodeStatus.PATIENT
        enqueued = (
            not duplicate
            and event.subscriber not in case.pending_cdra
            and event.subscriber not in case.cdra_done
        )
    else:
        to = NodeStatus.CLEARED if status == NodeStatus.SUSPECT else status
        duplicate = False
        enqueued = False
    fields = {
        "subscriber": event.subscriber,
        "result": event.result.value,
        "reported_at": _iso(event.reported_at),
        "from": status.value,
        "to": to.value,
        "enqueued": enqueued,
    }
    if duplicate:
        fields["duplicate"] = True
    audit_event = _stamp(case, "test", at or event.reported_at, **fields)
    return apply_event(case, audit_event)


def attach_cdra(
    case: InvestigationCase,
    patient: str,
    records: Sequence[CdrRecord],
    window: TimeWindow,
    *,
    at: datetime | None = None,
) -> InvestigationCase:
    if patient not in case.pending_cdra:
        raise CaseError(f"{patient} has no pending CDRA")
    event = _stamp(
        case,
        "attach",
        at or datetime.now(),
        patient=patient,
        window=_window_doc(window),
        records=[record_to_json(r) for r in records],
    )
    return apply_event(case, event)


def merge_exposure_contacts(
    case: InvestigationCase,
    exposures: Sequence[ResolvedExposure],
    *,
    at: datetime | None = None,
) -> InvestigationCase:
    """Fold ENS matches into the web as zero-tally proximity edges.

    Unresolvable exposures (no consent → subscriber is None) are skipped with
    an audit diagnostic rather than failing the batch.
    """
    at = at or datetime.now()
    for exposure in exposures:
        base = {
            "start": _iso(exposure.exposure_start),
            "end": _iso(exposure.exposure_end),
            "minutes": exposure.cumulative_minutes,
        }
        anchor = exposure.patient or case.index
        if exposure.subscriber is None:
            event = _stamp(
                case, "exposure", at,
                subscriber=None, patient=anchor,
                skipped=True, reason="no resolvable subscriber (consent withheld)",
                **base,
            )
            case = apply_event(case, event)
            continue
        if anchor not in case.web.nodes:
            raise CaseError(f"exposure anchor {anchor} is not in the web")
        if exposure.subscriber == anchor:
            event = _stamp(
                case, "exposure", at,
                subscriber=exposure.subscriber, patient=anchor,
                skipped=True, reason="self-exposure",
                **base,
            )
            case = apply_event(case, event)
            continue
        status = (
            case.web.status_of(exposure.subscriber)
            if exposure.subscriber in case.web.nodes
            else NodeStatus.UNKNOWN
        )
        to = (
            NodeStatus.SUSPECT
            if status in (NodeStatus.UNKNOWN, NodeStatus.CLEARED)
            else status
        )
        fields = {
            "subscriber": exposure.subscriber,
            "patient": anchor,
            "from": status.value,
            "to": to.value,
            **base,
        }
        if status == NodeStatus.CLEARED:
            fields["flag"] = "re-promotion"
        case = apply_event(case, _stamp(case, "exposure", at, **fields))
    return case


def replay_audit(events: Sequence[dict]) -> InvestigationCase:
    """Rebuild a case purely from its audit log (first event must be open)."""
    if not events:
        raise CaseError("empty audit log")
    case: InvestigationCase | None = None
    for event in events:
        case = apply_event(case, event)
    assert case is not None
    return case


def case_to_doc(case: InvestigationCase) -> dict:
    """Versioned JSON snapshot of the whole case (wire + comparison form)."""
    return {
        "schema": CASE_SCHEMA,
        "case_id": case.case_id,
        "index": case.index,
        "closed": case.closed,
        "web": graph_to_json_doc(case.web),
        "pending_cdra": list(case.pending_cdra),
        "cdra_done": sorted(case.cdra_done),
        "test_log": [
            {
                "subscriber": t.subscriber,
                "result": t.result.value,
                "reported_at": _iso(t.reported_at),
            }
            for t in case.test_log
        ],
        "audit": list(case.audit),
    }


def canonical_json(doc: dict) -> bytes:
    """Stable byte encoding used for the audit-replay equality check."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()

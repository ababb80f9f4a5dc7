"""Scripted CDR trace loop over the golden fixtures, stage by stage.

Opens a case for the table-2 subject, confirms the interviewed contacts,
records D's positive test, attaches D's (re-keyed table-3) CDR, then proves
the audit log replays to the same state byte for byte. Pass --store to run
the same flow through a persistent on-disk store instead of in memory.
"""

import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from epitrace.cdr import parse_cdr_file, parse_window_text
from epitrace.investigation import (
    TestEvent,
    TestResult,
    attach_cdra,
    canonical_json,
    case_to_doc,
    confirm_contacts,
    open_case,
    record_test_result,
    replay_audit,
)

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

FOCAL = "1234567890"
CONTACT_C = "15151515151"
CONTACT_D = "17171717171"
CONTACT_E = "18181818181"


def load(name):
    records, diagnostics = parse_cdr_file((DATA / name).read_bytes())
    if diagnostics:
        raise SystemExit(f"{name}: unexpected bad rows: {diagnostics}")
    return records


def show(case, stage):
    statuses = sorted(
        (info.label, subscriber, info.status.value)
        for subscriber, info in case.web.nodes.items()
    )
    print(f"--- {stage}")
    for label, subscriber, status in statuses:
        if status != "Unknown":
            print(f"  {label}  {subscriber:<12} {status}")
    unknown = sum(1 for _, _, s in statuses if s == "Unknown")
    print(f"  ({unknown} Unknown)  pending CDR requests: {list(case.pending_cdra)}")


def run(store_root=None):
    table2 = load("table2.csv")
    table3 = [replace(r, a_party=CONTACT_D) for r in load("table3.csv")]
    window_1 = parse_window_text("2020-05-01..2020-05-07")
    window_2 = parse_window_text("2020-05-01..2020-05-14")
    contacts = {CONTACT_C, CONTACT_D, CONTACT_E}

    if store_root:
        from epitrace.store import CaseStore

        store = CaseStore(store_root)
        case = store.open_case(FOCAL, table2, window_1, case_id="case-study-1",
                               at=datetime(2020, 5, 8, 9))
        show(case, f"opened case {case.case_id} (store: {store_root})")
        case = store.confirm(case.case_id, FOCAL, contacts,
                             at=datetime(2020, 5, 8, 10))
        show(case, "confirmed contacts C, D, E")
        case = store.record_test(case.case_id, TestEvent(
            CONTACT_D, TestResult.POSITIVE, datetime(2020, 5, 9, 9)))
        show(case, "subscriber D tested Positive")
        case = store.attach(case.case_id, CONTACT_D, table3, window_2,
                            at=datetime(2020, 5, 9, 12))
        show(case, "attached D's CDR, webs merged")
    else:
        case = open_case(FOCAL, table2, window_1, case_id="case-study-1",
                         at=datetime(2020, 5, 8, 9))
        show(case, "opened case case-study-1 (in memory)")
        case = confirm_contacts(case, FOCAL, contacts,
                                at=datetime(2020, 5, 8, 10))
        show(case, "confirmed contacts C, D, E")
        case = record_test_result(case, TestEvent(
            CONTACT_D, TestResult.POSITIVE, datetime(2020, 5, 9, 9)))
        show(case, "subscriber D tested Positive")
        case = attach_cdra(case, CONTACT_D, table3, window_2,
                           at=datetime(2020, 5, 9, 12))
        show(case, "attached D's CDR, webs merged")

    replayed = replay_audit(case.audit)
    identical = canonical_json(case_to_doc(replayed)) == canonical_json(
        case_to_doc(case)
    )
    print(f"--- audit: {len(case.audit)} events, replay byte-identical: {identical}")
    if not identical:
        raise SystemExit("replay drifted from the live state")
    print(json.dumps(case_to_doc(case)["web"], indent=2)[:200] + " ...")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--store", help="persist through an on-disk store root")
    run(parser.parse_args().store)

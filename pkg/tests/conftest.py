"""Shared fixtures: golden CDR tables and the scripted investigation flow."""

from __future__ import annotations

from datetime import datetime
from dataclasses import replace
from pathlib import Path

import pytest

from epitrace.cdr import parse_cdr_file, parse_window_text
from epitrace.investigation import (
    InvestigationCase,
    TestEvent,
    TestResult,
    attach_cdra,
    confirm_contacts,
    open_case,
    record_test_result,
)

# domain classes, not test containers, despite the Test* names
TestResult.__test__ = False
TestEvent.__test__ = False

DATA = Path(__file__).parent / "data"
SCENARIOS = Path(__file__).parent.parent / "scenarios"

FOCAL2 = "1234567890"  # table2's subject
FOCAL3 = "9876543210"  # table3's subject
# table2 aliases in first-seen order: B=14..., C=15..., D=17..., E=18...
SUBSCRIBER_C = "15151515151"
SUBSCRIBER_D = "17171717171"
SUBSCRIBER_E = "18181818181"

WINDOW_CS1 = parse_window_text("2020-05-01..2020-05-07")
WINDOW_T3 = parse_window_text("2020-05-01..2020-05-14")


@pytest.fixture(scope="session")
def table2_bytes() -> bytes:
    return (DATA / "table2.csv").read_bytes()


@pytest.fixture(scope="session")
def table3_bytes() -> bytes:
    return (DATA / "table3.csv").read_bytes()


@pytest.fixture(scope="session")
def table2_records(table2_bytes):
    records, diagnostics = parse_cdr_file(table2_bytes)
    assert not diagnostics
    return records


@pytest.fixture(scope="session")
def table3_records(table3_bytes):
    records, diagnostics = parse_cdr_file(table3_bytes)
    assert not diagnostics
    return records


def rekey_to(records, subscriber: str):
    """Table 3 re-keyed so its focal is `subscriber` (the D of case study 1)."""
    return [replace(r, a_party=subscriber) for r in records]


def run_case_study_1(table2_records, table3_records) -> InvestigationCase:
    """The scripted trace loop: open → confirm {C,D,E} → D positive → attach D."""
    case = open_case(
        FOCAL2,
        table2_records,
        WINDOW_CS1,
        case_id="case-study-1",
        at=datetime(2020, 5, 8, 9, 0, 0),
    )
    case = confirm_contacts(
        case,
        FOCAL2,
        {SUBSCRIBER_C, SUBSCRIBER_D, SUBSCRIBER_E},
        at=datetime(2020, 5, 8, 10, 0, 0),
    )
    case = record_test_result(
        case,
        TestEvent(SUBSCRIBER_D, TestResult.POSITIVE, datetime(2020, 5, 9, 9, 0, 0)),
    )
    case = attach_cdra(
        case,
        SUBSCRIBER_D,
        rekey_to(table3_records, SUBSCRIBER_D),
        WINDOW_T3,
        at=datetime(2020, 5, 9, 12, 0, 0),
    )
    return case


@pytest.fixture()
def case_study_1(table2_records, table3_records) -> InvestigationCase:
    return run_case_study_1(table2_records, table3_records)

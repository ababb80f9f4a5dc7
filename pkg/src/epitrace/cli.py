"""Operator command line: ingest, graph, path, case ops, ens-sim, serve.

Usage errors exit 2 (argparse); runtime failures print one diagnostic line
to stderr and exit 1. `case` subcommands work against a local store root by
default or a remote service via --url.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime
from pathlib import Path

from . import __version__
from .cdr import (
    CsvDialect,
    TimeWindow,
    diagnostics_report,
    filter_window,
    normalize_records,
    parse_cdr_file,
    parse_window_text,
    to_canonical_csv,
)
from .config import load_config
from .geopath import export_geojson, reconstruct_path
from .graph import build_graph, export_graph
from .investigation import TestEvent, TestResult, case_to_doc


def _read_source(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _load_records(args, *, window_default: TimeWindow | None = None):
    """Parse + optional window filter + normalize; diagnostics to stderr."""
    records, diagnostics = parse_cdr_file(
        _read_source(args.file), CsvDialect(date_order=args.dialect)
    )
    if diagnostics:
        sys.stderr.write(diagnostics_report(diagnostics))
    window = parse_window_text(args.window) if args.window else window_default
    if window is not None:
        records = filter_window(records, window)
    return normalize_records(records), window


def _emit(text: str, output: str | None) -> None:
    if output and output != "-":
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args) -> int:
    records, _ = _load_records(args)
    _emit(to_canonical_csv(records), args.output)
    return 0


def cmd_graph(args) -> int:
    records, _ = _load_records(args)
    graph = build_graph(args.focal, records)
    _emit(export_graph(graph, format=args.format), args.output)
    return 0


def cmd_path(args) -> int:
    records, _ = _load_records(args)
    if args.focal:
        records = [r for r in records if r.a_party == args.focal]
    _emit(export_geojson(reconstruct_path(records)), args.output)
    return 0


def cmd_ens_sim(args) -> int:
    from .ens.sim import run_scenario

    script = json.loads(_read_source(args.scenario))
    report = run_scenario(script)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    config = load_config(
        args.config,
        host=args.host,
        port=args.port,
        store_root=args.store,
    )
    try:
        serve(config)
    except OSError as exc:  # unbindable port and friends
        sys.stderr.write(f"error: cannot start service: {exc}\n")
        return 1
    return 0


# --- case subcommands (local store or remote service) ----------------------


class _RemoteError(RuntimeError):
    pass


class _Remote:
    """Thin HTTP client mirroring the store methods the CLI needs."""

    def __init__(self, url: str, token: str):
        import httpx

        headers = {"X-API-Token": token} if token else {}
        self.client = httpx.Client(base_url=url.rstrip("/"), headers=headers, timeout=30)

    def _check(self, response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("error", response.text)
            except ValueError:
                detail = response.text
            raise _RemoteError(f"{response.status_code}: {detail}")
        return response.json()

    def open_case(self, index, csv_bytes, window, case_id, dialect):
        params = {"index": index, "dialect": dialect}
        if window:
            params["window"] = window
        if case_id:
            params["case_id"] = case_id
        return self._check(
            self.client.post(
                "/cases", params=params, content=csv_bytes,
                headers={"content-type": "text/csv"},
            )
        )

    def confirm(self, case_id, patient, contacts):
        return self._check(
            self.client.post(
                f"/cases/{case_id}/confirm",
                json={"patient": patient, "contacts": contacts},
            )
        )

    def test(self, case_id, subscriber, result, reported_at):
        payload = {"subscriber": subscriber, "result": result}
        if reported_at:
            payload["reported_at"] = reported_at
        return self._check(self.client.post(f"/cases/{case_id}/tests", json=payload))

    def attach(self, case_id, patient, csv_bytes, window, dialect):
        params = {"patient": patient, "dialect": dialect}
        if window:
            params["window"] = window
        return self._check(
            self.client.post(
                f"/cases/{case_id}/cdra", params=params, content=csv_bytes,
                headers={"content-type": "text/csv"},
            )
        )

    def show(self, case_id):
        return self._check(self.client.get(f"/cases/{case_id}"))

    def graph(self, case_id, format):
        response = self.client.get(f"/cases/{case_id}/graph", params={"format": format})
        if response.status_code >= 400:
            self._check(response)
        return response.text

    def list_cases(self):
        return self._check(self.client.get("/cases"))


def _case_window(args) -> TimeWindow:
    if args.window:
        return parse_window_text(args.window)
    return TimeWindow.ending_at(datetime.now())


def cmd_case(args) -> int:
    remote = _Remote(args.url, args.token) if args.url else None
    if remote is None:
        from .store import CaseStore

        store = CaseStore(args.store)

    def dump(doc: dict) -> int:
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return 0

    if args.case_cmd == "open":
        csv_bytes = _read_source(args.file)
        if remote:
            return dump(remote.open_case(args.index, csv_bytes, args.window, args.case_id, args.dialect))
        records, diagnostics = parse_cdr_file(csv_bytes, CsvDialect(date_order=args.dialect))
        if diagnostics:
            sys.stderr.write(diagnostics_report(diagnostics))
        case = store.open_case(args.index, records, _case_window(args), case_id=args.case_id)
        return dump(case_to_doc(case))

    if args.case_cmd == "confirm":
        contacts = [c for c in args.contacts.split(",") if c]
        if remote:
            return dump(remote.confirm(args.case_id, args.patient, contacts))
        return dump(case_to_doc(store.confirm(args.case_id, args.patient, contacts)))

    if args.case_cmd == "test":
        if remote:
            return dump(remote.test(args.case_id, args.subscriber, args.result, args.at))
        reported_at = datetime.fromisoformat(args.at) if args.at else datetime.now()
        event = TestEvent(
            subscriber=args.subscriber,
            result=TestResult(args.result),
            reported_at=reported_at,
        )
        return dump(case_to_doc(store.record_test(args.case_id, event)))

    if args.case_cmd == "attach":
        csv_bytes = _read_source(args.file)
        if remote:
            return dump(remote.attach(args.case_id, args.patient, csv_bytes, args.window, args.dialect))
        records, diagnostics = parse_cdr_file(csv_bytes, CsvDialect(date_order=args.dialect))
        if diagnostics:
            sys.stderr.write(diagnostics_report(diagnostics))
        case = store.attach(args.case_id, args.patient, records, _case_window(args))
        return dump(case_to_doc(case))

    if args.case_cmd == "show":
        if args.graph:
            if remote:
                sys.stdout.write(remote.graph(args.case_id, args.graph))
                return 0
            sys.stdout.write(export_graph(store.get_case(args.case_id).web, format=args.graph))
            return 0
        if remote:
            return dump(remote.show(args.case_id))
        return dump(case_to_doc(store.get_case(args.case_id)))

    if args.case_cmd == "list":
        if remote:
            return dump(remote.list_cases())
        return dump({"cases": store.list_cases()})

    raise AssertionError(f"unhandled case subcommand {args.case_cmd}")


# --- parser -----------------------------------------------------------------


def _add_csv_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", help="CDR CSV file ('-' for stdin)")
    parser.add_argument("--dialect", choices=("mdy", "dmy"), default="mdy",
                        help="date order of the Date & Time column (default mdy)")
    parser.add_argument("--window", metavar="START..END",
                        help="closed time window, e.g. 2020-05-01..2020-05-07")


def _add_output_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", help="write to file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epitrace",
        description="Contact-trace engine: CDR analysis, case workflow, ENS tools.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a CDR file to canonical CSV")
    _add_csv_args(p)
    _add_output_arg(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("graph", help="build a contact graph from a CDR file")
    p.add_argument("--focal", required=True, help="subscriber the CDR belongs to")
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    _add_csv_args(p)
    _add_output_arg(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("path", help="reconstruct a movement path as GeoJSON")
    p.add_argument("--focal", help="keep only rows of this subscriber")
    _add_csv_args(p)
    _add_output_arg(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("case", help="run investigation operations")
    p.add_argument("--store", default="store", help="store root (default ./store)")
    p.add_argument("--url", help="remote service URL (overrides --store)")
    p.add_argument("--token", default=os.environ.get("EPITRACE_API_TOKEN", ""),
                   help="API token for --url mode")
    case_sub = p.add_subparsers(dest="case_cmd", required=True)

    c = case_sub.add_parser("open", help="open a case from an index patient's CDR")
    c.add_argument("--index", required=True)
    c.add_argument("--case-id", dest="case_id")
    _add_csv_args(c)

    c = case_sub.add_parser("confirm", help="record interview confirmations")
    c.add_argument("case_id")
    c.add_argument("--patient", required=True)
    c.add_argument("--contacts", required=True, help="comma-separated subscribers")

    c = case_sub.add_parser("test", help="record a test result")
    c.add_argument("case_id")
    c.add_argument("--subscriber", required=True)
    c.add_argument("--result", required=True, choices=("Positive", "Negative"))
    c.add_argument("--at", help="reported-at date-time (ISO)")

    c = case_sub.add_parser("attach", help="attach a pending patient's CDRA")
    c.add_argument("case_id")
    c.add_argument("--patient", required=True)
    _add_csv_args(c)

    c = case_sub.add_parser("show", help="print a case (or its graph)")
    c.add_argument("case_id")
    c.add_argument("--graph", choices=("dot", "json"),
                   help="print the contact graph instead of the case document")

    c = case_sub.add_parser("list", help="list case ids")

    p.set_defaults(func=cmd_case)

    p = sub.add_parser("ens-sim", help="run an exposure-notification scenario")
    p.add_argument("scenario", help="scenario JSON file ('-' for stdin)")
    _add_output_arg(p)
    p.set_defaults(func=cmd_ens_sim)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--store", help="store root directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, _RemoteError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        sys.stderr.write(f"error: {message}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

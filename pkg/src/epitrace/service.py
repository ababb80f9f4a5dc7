"""HTTP JSON API over the engine, backed by the event-sourced CaseStore.

Every mutating endpoint maps to exactly one engine operation and one durable
log append (the store fsyncs before any 2xx goes out). Optional static-token
auth; optional department webhook for consenting ENS matches; the console UI
is served as static files under /ui when a build is present.
"""

from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .cdr import (
    CsvDialect,
    IngestError,
    TimeWindow,
    parse_cdr_file,
    parse_window_text,
)
from .config import ServiceConfig
from .ens.core import EnsError, upload_from_doc
from .geopath import path_to_geojson_doc
from .graph import export_graph
from .investigation import ResolvedExposure, TestEvent, TestResult, case_to_doc
from .quarantine import LocationPing, geo_tag
from .store import CaseStore, StoreError

API_VERSION = "1"


def _parse_dt(text: str, field: str) -> datetime:
    try:
        return datetime.fromisoformat(text)
    except (TypeError, ValueError):
        raise IngestError(f"{field}: bad date-time {text!r}") from None


def _require(payload: dict, *names: str) -> None:
    missing = [n for n in names if payload.get(n) in (None, "")]
    if missing:
        raise IngestError(f"missing required field(s): {', '.join(missing)}")


def create_app(config: ServiceConfig, store: CaseStore | None = None) -> FastAPI:
    store = store if store is not None else CaseStore(config.store_root)
    app = FastAPI(title="epitrace", version=API_VERSION, docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.config = config

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        status = 409 if isinstance(exc, StoreError) and "already exists" in str(exc) else 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(KeyError)
    async def _key_error(request: Request, exc: KeyError) -> JSONResponse:
        return JSONResponse(status_code=404, content={"error": exc.args[0]})

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        token = config.api_token
        exempt = request.url.path == "/health" or request.url.path.startswith("/ui")
        if token and not exempt and request.headers.get("x-api-token") != token:
            return JSONResponse(status_code=401, content={"error": "missing or bad API token"})
        return await call_next(request)

    def default_window(now: datetime | None = None) -> TimeWindow:
        return TimeWindow.ending_at(now or datetime.now(), days=config.window_days)

    async def read_csv_request(request: Request) -> tuple[dict, bytes]:
        """Fields + CSV bytes from either multipart or a raw-body request.

        Form fields win over query parameters of the same name."""
        fields = dict(request.query_params)
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            fields.update({k: v for k, v in form.items() if isinstance(v, str)})
            upload = form.get("cdr")
            if upload is None or isinstance(upload, str):
                raise IngestError("multipart request needs a 'cdr' file part")
            return fields, await upload.read()
        return fields, await request.body()

    def parse_csv_fields(fields: dict, body: bytes):
        dialect = CsvDialect(date_order=fields.get("dialect", "mdy"))
        if dialect.date_order not in ("mdy", "dmy"):
            raise IngestError(f"unknown dialect {dialect.date_order!r}")
        window = (
            parse_window_text(fields["window"])
            if fields.get("window")
            else default_window()
        )
        records, diagnostics = parse_cdr_file(body, dialect)
        return records, [str(d) for d in diagnostics], window

    # --- health -----------------------------------------------------------

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "cases": len(store.list_cases())}

    # --- cases --------------------------------------------------------------

    @app.post("/cases", status_code=201)
    async def post_case(request: Request) -> dict:
        fields, body = await read_csv_request(request)
        _require(fields, "index")
        records, diagnostics, window = parse_csv_fields(fields, body)
        case = store.open_case(
            fields["index"], records, window, case_id=fields.get("case_id") or None
        )
        return {"case": case_to_doc(case), "diagnostics": diagnostics}

    @app.get("/cases")
    def get_cases() -> dict:
        return {"cases": store.list_cases()}

    @app.get("/cases/{case_id}")
    def get_case(case_id: str) -> dict:
        return case_to_doc(store.get_case(case_id))

    @app.get("/cases/{case_id}/graph")
    def get_case_graph(case_id: str, format: str = Query("json")) -> Response:
        case = store.get_case(case_id)
        text = export_graph(case.web, format=format)
        media = "application/json" if format == "json" else "text/vnd.graphviz"
        return Response(content=text, media_type=media)

    @app.post("/cases/{case_id}/confirm")
    def post_confirm(case_id: str, payload: dict = Body(...)) -> dict:
        _require(payload, "patient")
        contacts = payload.get("contacts", [])
        if not isinstance(contacts, list):
            raise IngestError("contacts must be a list")
        case = store.confirm(case_id, payload["patient"], contacts)
        return case_to_doc(case)

    @app.post("/cases/{case_id}/tests")
    def post_test(case_id: str, payload: dict = Body(...)) -> dict:
        _require(payload, "subscriber", "result")
        try:
            result = TestResult(payload["result"])
        except ValueError:
            raise IngestError("result must be Positive or Negative") from None
        reported_at = (
            _parse_dt(payload["reported_at"], "reported_at")
            if payload.get("reported_at")
            else datetime.now()
        )
        event = TestEvent(
            subscriber=payload["subscriber"], result=result, reported_at=reported_at
        )
        return case_to_doc(store.record_test(case_id, event))

    @app.post("/cases/{case_id}/cdra")
    async def post_cdra(case_id: str, request: Request) -> dict:
        fields, body = await read_csv_request(request)
        _require(fields, "patient")
        records, diagnostics, window = parse_csv_fields(fields, body)
        case = store.attach(case_id, fields["patient"], records, window)
        return {"case": case_to_doc(case), "diagnostics": diagnostics}

    @app.get("/cases/{case_id}/paths/{subscriber}")
    def get_case_path(case_id: str, subscriber: str) -> dict:
        return path_to_geojson_doc(store.case_path(case_id, subscriber))

    # --- advisories -----------------------------------------------------------

    @app.post("/advisories", status_code=201)
    def post_advisory(payload: dict = Body(...)) -> dict:
        _require(payload, "case_id", "subscriber")
        ttl = payload.get("ttl_days", config.advisory_ttl_days)
        if not isinstance(ttl, int):
            raise IngestError("ttl_days must be an integer")
        return store.publish_case_advisory(payload["case_id"], payload["subscriber"], ttl)

    @app.get("/advisories")
    def get_advisories() -> dict:
        return {"advisories": store.list_advisories()}

    # --- quarantine -------------------------------------------------------------

    @app.post("/quarantine/tags", status_code=201)
    def post_tag(payload: dict = Body(...)) -> dict:
        _require(payload, "subscriber", "center_lat", "center_lon")
        now = datetime.now()
        active_from = (
            _parse_dt(payload["active_from"], "active_from")
            if payload.get("active_from")
            else now
        )
        active_to = (
            _parse_dt(payload["active_to"], "active_to")
            if payload.get("active_to")
            else active_from + timedelta(days=config.window_days)
        )
        tag = geo_tag(
            payload["subscriber"],
            float(payload["center_lat"]),
            float(payload["center_lon"]),
            float(payload.get("radius_m", config.quarantine_radius_m)),
            active_from=active_from,
            active_to=active_to,
        )
        return store.add_tag(tag)

    @app.post("/quarantine/pings", status_code=201)
    def post_ping(payload: dict = Body(...)) -> dict:
        _require(payload, "subscriber", "latitude", "longitude")
        at = _parse_dt(payload["at"], "at") if payload.get("at") else datetime.now()
        ping = LocationPing(
            subscriber=payload["subscriber"],
            latitude=float(payload["latitude"]),
            longitude=float(payload["longitude"]),
            at=at,
        )
        alert = store.add_ping(ping)
        return {"alert": alert}

    @app.get("/alerts")
    def get_alerts(since: int = Query(0, ge=0)) -> dict:
        alerts = store.alerts_since(since)
        cursor = alerts[-1]["seq"] if alerts else since
        return {"alerts": alerts, "cursor": cursor}

    # --- ENS ------------------------------------------------------------------

    @app.post("/ens/diagnosis-keys", status_code=201)
    def post_diagnosis_keys(payload: dict = Body(...)) -> dict:
        doc = dict(payload)
        doc.setdefault("uploaded_at", datetime.now().isoformat(sep=" "))
        try:
            upload = upload_from_doc(doc)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, EnsError):
                raise
            raise IngestError(f"bad diagnosis upload: {exc}") from None
        added, excluded = store.publish_keys(upload)
        return {
            "added": added,
            "excluded": excluded,
            "registry_size": len(store.registry),
        }

    @app.get("/ens/diagnosis-keys")
    def get_diagnosis_keys(since: int = Query(0, ge=0)) -> dict:
        entries = store.registry_entries(since)
        cursor = entries[-1]["seq"] if entries else since
        return {"entries": entries, "cursor": cursor}

    @app.post("/ens/exposures/import")
    def post_exposures(payload: dict = Body(...)) -> dict:
        _require(payload, "case_id")
        raw = payload.get("exposures", [])
        if not isinstance(raw, list):
            raise IngestError("exposures must be a list")
        exposures: list[ResolvedExposure] = []
        for i, doc in enumerate(raw):
            where = f"exposures[{i}]"
            if not isinstance(doc, dict):
                raise IngestError(f"{where}: expected an object")
            for name in ("start", "end", "minutes"):
                if name not in doc:
                    raise IngestError(f"{where}: missing {name}")
            consent = bool(doc.get("consent", False))
            subscriber = doc.get("subscriber") if consent else None
            exposures.append(
                ResolvedExposure(
                    subscriber=subscriber or None,
                    exposure_start=_parse_dt(doc["start"], f"{where}.start"),
                    exposure_end=_parse_dt(doc["end"], f"{where}.end"),
                    cumulative_minutes=float(doc["minutes"]),
                    patient=doc.get("patient") or None,
                )
            )
        case = store.merge_exposures(payload["case_id"], exposures)
        skipped = sum(1 for e in exposures if e.subscriber is None)
        webhooks_sent = _notify_department(config, payload["case_id"], exposures)
        return {
            "case": case_to_doc(case),
            "imported": len(exposures) - skipped,
            "skipped": skipped,
            "webhooks_sent": webhooks_sent,
        }

    # --- console UI (static) ------------------------------------------------

    ui_root = Path(config.ui_root) if config.ui_root else Path("frontend/dist")
    if ui_root.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_root), html=True), name="ui")

    return app


def _notify_department(
    config: ServiceConfig, case_id: str, exposures: list[ResolvedExposure]
) -> int:
    """Fire the department webhook for each consenting (resolved) exposure.

    Failures are swallowed: notification is best-effort and must never fail
    the import that recorded the exposure.
    """
    if not config.department_webhook:
        return 0
    import httpx

    sent = 0
    for exposure in exposures:
        if exposure.subscriber is None:
            continue
        payload = {
            "kind": "exposure-notification",
            "case_id": case_id,
            "subscriber": exposure.subscriber,
            "start": exposure.exposure_start.isoformat(sep=" "),
            "end": exposure.exposure_end.isoformat(sep=" "),
            "minutes": exposure.cumulative_minutes,
        }
        try:
            httpx.post(config.department_webhook, json=payload, timeout=3.0)
            sent += 1
        except httpx.HTTPError:
            pass
    return sent


def serve(config: ServiceConfig) -> None:
    """Run the service (blocking). Raises on unbindable port/unwritable store."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")

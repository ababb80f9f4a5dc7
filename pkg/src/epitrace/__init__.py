"""epitrace: CDR-driven contact tracing with a parallel exposure-notification lane.

Engine modules are pure and dependency-free (cdr, graph, investigation,
geopath, quarantine, ens); plumbing (store, service, cli) wires them to
files and HTTP.
"""

__version__ = "1.0.0"

from .cdr import (  # noqa: F401
    CallType,
    CdrRecord,
    CsvDialect,
    IngestError,
    RowDiagnostic,
    SchemaError,
    TimeWindow,
    filter_window,
    normalize_records,
    parse_cdr_file,
    parse_window_text,
    to_canonical_csv,
)
from .graph import (  # noqa: F401
    ContactGraph,
    EdgeStats,
    GraphError,
    NodeInfo,
    NodeStatus,
    build_graph,
    export_graph,
    merge_graphs,
)
from .investigation import (  # noqa: F401
    CaseError,
    InvestigationCase,
    ResolvedExposure,
    TestEvent,
    TestResult,
    attach_cdra,
    canonical_json,
    case_to_doc,
    confirm_contacts,
    merge_exposure_contacts,
    open_case,
    record_test_result,
    replay_audit,
)
from .geopath import (  # noqa: F401
    PathAdvisory,
    PathError,
    PathTrace,
    Waypoint,
    export_geojson,
    publish_advisory,
    reconstruct_path,
)
from .quarantine import (  # noqa: F401
    LocationPing,
    QuarantineError,
    QuarantineMonitor,
    QuarantineTag,
    ViolationAlert,
    evaluate_ping,
    geo_tag,
    haversine_m,
)

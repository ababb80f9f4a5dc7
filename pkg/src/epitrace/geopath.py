"""Movement-path reconstruction from cell-site coordinates.

Waypoints collapse maximal runs of consecutive records at identical tower
coordinates (exact decimal equality — operators emit fixed coordinates, so
no epsilon merging). Published advisories strip the subscriber number.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Sequence

from .cdr import CdrRecord


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    cell_site: str
    latitude: float
    longitude: float
    arrived: datetime
    departed: datetime

    def __post_init__(self) -> None:
        if self.arrived > self.departed:
            raise PathError("waypoint arrived after departed")


@dataclass(frozen=True)
class PathTrace:
    subscriber: str
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self) -> None:
        previous: Waypoint | None = None
        for wp in self.waypoints:
            if previous is not None:
                if wp.arrived < previous.arrived:
                    raise PathError("waypoint arrivals must be non-decreasing")
                if (wp.latitude, wp.longitude) == (
                    previous.latitude,
                    previous.longitude,
                ):
                    raise PathError("consecutive waypoints share coordinates")
            previous = wp


@dataclass(frozen=True)
class PathAdvisory:
    advisory_id: str
    path: PathTrace
    valid_until: datetime
    message: str


def reconstruct_path(records: Sequence[CdrRecord]) -> PathTrace:
    """One waypoint per maximal same-coordinate run; empty input → empty path.

    Records must already be normalized (time-sorted, deduplicated).
    """
    if not records:
        return PathTrace(subscriber="", waypoints=())
    subscriber = records[0].a_party
    waypoints: list[Waypoint] = []
    run_start = 0
    for i in range(1, len(records) + 1):
        end_of_run = i == len(records) or (
            (records[i].latitude, records[i].longitude)
            != (records[run_start].latitude, records[run_start].longitude)
        )
        if not end_of_run:
            continue
        first, last = records[run_start], records[i - 1]
        waypoints.append(
            Waypoint(
                cell_site=first.cell_site,
                latitude=first.latitude,
                longitude=first.longitude,
                arrived=first.timestamp,
                departed=last.timestamp,
            )
        )
        run_start = i
    return PathTrace(subscriber=subscriber, waypoints=tuple(waypoints))


def path_to_geojson_doc(path: PathTrace) -> dict:
    """RFC 7946 FeatureCollection: LineString (≥2 waypoints) + one Point each."""
    features: list[dict] = []
    if len(path.waypoints) >= 2:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [
                        [wp.longitude, wp.latitude] for wp in path.waypoints
                    ],
                },
                "properties": {"role": "path"},
            }
        )
    for i, wp in enumerate(path.waypoints):
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [wp.longitude, wp.latitude],
                },
                "properties": {
                    "role": "waypoint",
                    "order": i,
                    "cell_site": wp.cell_site,
                    "arrived": wp.arrived.isoformat(sep=" "),
                    "departed": wp.departed.isoformat(sep=" "),
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def export_geojson(path: PathTrace) -> str:
    return json.dumps(path_to_geojson_doc(path), indent=2, sort_keys=True) + "\n"


def path_from_geojson_doc(doc: dict) -> PathTrace:
    """Recover waypoint order/coordinates from an exported document."""
    points = [
        f for f in doc["features"] if f["properties"].get("role") == "waypoint"
    ]
    points.sort(key=lambda f: f["properties"]["order"])
    waypoints = tuple(
        Waypoint(
            cell_site=f["properties"]["cell_site"],
            latitude=f["geometry"]["coordinates"][1],
            longitude=f["geometry"]["coordinates"][0],
            arrived=datetime.fromisoformat(f["properties"]["arrived"]),
            departed=datetime.fromisoformat(f["properties"]["departed"]),
        )
        for f in points
    )
    return PathTrace(subscriber="", waypoints=waypoints)


_ADVISORY_MESSAGE = (
    "Public health advisory: a confirmed patient travelled this route. "
    "Avoid the marked locations where possible. Positions are cell-tower "
    "resolution, not street resolution."
)


def publish_advisory(
    path: PathTrace,
    ttl_days: int = 14,
    *,
    now: datetime | None = None,
    advisory_id: str | None = None,
) -> PathAdvisory:
    """Public copy of a path, valid `ttl_days` (default 14) from now."""
    if not path.waypoints:
        raise PathError("cannot publish an advisory for an empty path")
    if ttl_days <= 0:
        raise PathError("advisory ttl must be a positive number of days")
    now = now or datetime.now()
    # privacy: the published trace never carries the subscriber number
    public_path = PathTrace(subscriber="", waypoints=path.waypoints)
    return PathAdvisory(
        advisory_id=advisory_id or f"adv-{uuid.uuid4().hex[:12]}",
        path=public_path,
        valid_until=now + timedelta(days=ttl_days),
        message=_ADVISORY_MESSAGE,
    )


def advisory_to_doc(advisory: PathAdvisory) -> dict:
    """Wire form served by the API; contains no subscriber field anywhere."""
    return {
        "advisory_id": advisory.advisory_id,
        "valid_until": advisory.valid_until.isoformat(sep=" "),
        "message": advisory.message,
        "geojson": path_to_geojson_doc(advisory.path),
    }

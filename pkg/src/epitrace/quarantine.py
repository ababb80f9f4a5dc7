"""Quarantine geo-tagging and geofence violation alerts.

Distances are great-circle (haversine, R = 6371000 m); the sphere model is
within 0.5% of the ellipsoid, far below tower/phone geolocation error. The
fence boundary is non-violating (strict >) to avoid alert flapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

from .cdr import TimeWindow

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_RADIUS_M = 500.0


class QuarantineError(ValueError):
    pass


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two (degree) coordinates."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlambda = math.radians(lon2 - lon1)
    a = (
        math.sin(dphi / 2.0) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin(dlambda / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def _check_coords(latitude: float, longitude: float) -> None:
    if not -90.0 <= latitude <= 90.0:
        raise QuarantineError(f"latitude {latitude} out of range")
    if not -180.0 <= longitude <= 180.0:
        raise QuarantineError(f"longitude {longitude} out of range")


@dataclass(frozen=True)
class QuarantineTag:
    subscriber: str
    center_lat: float
    center_lon: float
    radius_m: float
    active_from: datetime
    active_to: datetime

    def __post_init__(self) -> None:
        if not self.subscriber:
            raise QuarantineError("tag subscriber is empty")
        _check_coords(self.center_lat, self.center_lon)
        if self.radius_m <= 0:
            raise QuarantineError("tag radius must be positive")
        if self.active_from > self.active_to:
            raise QuarantineError("tag active_from is after active_to")


@dataclass(frozen=True)
class LocationPing:
    subscriber: str
    latitude: float
    longitude: float
    at: datetime

    def __post_init__(self) -> None:
        _check_coords(self.latitude, self.longitude)


@dataclass(frozen=True)
class ViolationAlert:
    subscriber: str
    at: datetime
    distance_m: float
    tag: QuarantineTag

    def __post_init__(self) -> None:
        if self.distance_m <= self.tag.radius_m:
            raise QuarantineError("alert distance does not exceed the fence")


def geo_tag(
    subscriber: str,
    center_lat: float,
    center_lon: float,
    radius_m: float = DEFAULT_RADIUS_M,
    window: TimeWindow | None = None,
    *,
    active_from: datetime | None = None,
    active_to: datetime | None = None,
) -> QuarantineTag:
    """Validated tag value; storage/supersession lives in QuarantineMonitor."""
    if window is not None:
        active_from, active_to = window.start, window.end
    if active_from is None or active_to is None:
        raise QuarantineError("tag needs an active window")
    return QuarantineTag(
        subscriber=subscriber,
        center_lat=center_lat,
        center_lon=center_lon,
        radius_m=radius_m,
        active_from=active_from,
        active_to=active_to,
    )


def evaluate_ping(tag: QuarantineTag, ping: LocationPing) -> ViolationAlert | None:
    """Alert iff the ping is inside the active window and strictly outside
    the fence. Out-of-window pings are ignored, not errors."""
    if ping.subscriber != tag.subscriber:
        raise QuarantineError(
            f"ping subscriber {ping.subscriber} does not match tag {tag.subscriber}"
        )
    if not (tag.active_from <= ping.at <= tag.active_to):
        return None
    distance = haversine_m(tag.center_lat, tag.center_lon, ping.latitude, ping.longitude)
    if distance > tag.radius_m:
        return ViolationAlert(
            subscriber=ping.subscriber, at=ping.at, distance_m=distance, tag=tag
        )
    return None


def alert_to_doc(alert: ViolationAlert) -> dict:
    return {
        "kind": "quarantine-violation",
        "subscriber": alert.subscriber,
        "at": alert.at.isoformat(sep=" "),
        "distance_m": round(alert.distance_m, 3),
        "radius_m": alert.tag.radius_m,
        "center": [alert.tag.center_lat, alert.tag.center_lon],
    }


@dataclass
class QuarantineMonitor:
    """Mutable tag store with per-excursion alert hysteresis.

    At most one active tag per subscriber; re-tagging supersedes the old tag
    and both stay visible in the audit trail. A continuous run of violating
    pings emits a single alert; a compliant ping arms the next one.
    """

    tags: dict[str, QuarantineTag] = field(default_factory=dict)
    audit: list[dict] = field(default_factory=list)
    _violating: dict[str, bool] = field(default_factory=dict)

    def tag(self, tag: QuarantineTag) -> QuarantineTag:
        previous = self.tags.get(tag.subscriber)
        entry = {
            "op": "geo-tag",
            "subscriber": tag.subscriber,
            "center": [tag.center_lat, tag.center_lon],
            "radius_m": tag.radius_m,
            "active_from": tag.active_from.isoformat(sep=" "),
            "active_to": tag.active_to.isoformat(sep=" "),
        }
        if previous is not None:
            entry["superseded"] = {
                "center": [previous.center_lat, previous.center_lon],
                "radius_m": previous.radius_m,
            }
            self._violating.pop(tag.subscriber, None)  # new fence, new episode
        self.tags[tag.subscriber] = tag
        self.audit.append(entry)
        return tag

    def active_tag(self, subscriber: str) -> QuarantineTag | None:
        return self.tags.get(subscriber)

    def observe(self, ping: LocationPing) -> ViolationAlert | None:
        tag = self.tags.get(ping.subscriber)
        if tag is None:
            return None
        if not (tag.active_from <= ping.at <= tag.active_to):
            return None  # ignored; does not end an episode either
        alert = evaluate_ping(tag, ping)
        was_violating = self._violating.get(ping.subscriber, False)
        self._violating[ping.subscriber] = alert is not None
        if alert is not None and not was_violating:
            return alert
        return None

"""Deterministic desk-scale simulator driving the exposure-notification core.

Devices move on a Euclidean plane (BLE range is meters; no projection) and
exchange their current keys whenever a pair sits within the proximity
radius. A co-located tick contributes exactly tick_minutes of contact:
the observed key is logged at both tick start and tick end, and the
coalescing rule in record_encounter fuses consecutive ticks into one
encounter record.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .core import (
    DEFAULT_MIN_MATCH_MINUTES,
    DiagnosisUpload,
    EncounterLog,
    EphemeralKey,
    KeyRegistry,
    ROTATION_MINUTES,
    active_key,
    generate_key_schedule,
    notification_to_doc,
    publish_diagnosis,
    match_exposures,
    record_encounter,
)

SIM_EPOCH = datetime(2020, 5, 1)

REPORT_SCHEMA = "epitrace.sim-report/1"


class ScenarioError(ValueError):
    pass


@dataclass
class SimDevice:
    device_id: str
    waypoints: list[tuple[float, float]]
    schedule: list[EphemeralKey]
    log: EncounterLog = field(default_factory=EncounterLog)
    infected_at: int | None = None
    consent: bool = False

    def position(self, tick: int) -> tuple[float, float]:
        # scripts shorter than the run pin the device at its last waypoint
        return self.waypoints[min(tick, len(self.waypoints) - 1)]

    def infected(self, tick: int) -> bool:
        return self.infected_at is not None and tick >= self.infected_at


@dataclass
class SimWorld:
    devices: list[SimDevice]
    tick_minutes: int = 1
    proximity_radius_m: float = 10.0
    rng_seed: int = 0
    start: datetime = SIM_EPOCH
    tick: int = 0  # completed ticks

    def __post_init__(self) -> None:
        if self.tick_minutes < 1:
            raise ScenarioError("tick_minutes must be at least 1")
        seen: set[str] = set()
        for device in self.devices:
            if device.device_id in seen:
                raise ScenarioError(f"duplicate device id {device.device_id}")
            seen.add(device.device_id)
            if not device.waypoints:
                raise ScenarioError(f"device {device.device_id} has no waypoints")

    @property
    def now(self) -> datetime:
        return self.start + timedelta(minutes=self.tick * self.tick_minutes)


def build_world(
    specs: list[dict],
    ticks: int,
    seed: int,
    tick_minutes: int = 1,
    proximity_radius_m: float = 10.0,
    start: datetime = SIM_EPOCH,
) -> SimWorld:
    """World with per-device key schedules covering the whole run.

    Each device's RNG is seeded from (seed, device_id), so adding a device
    never perturbs the others' schedules.
    """
    horizon = max(ticks * tick_minutes, ROTATION_MINUTES[1])
    devices = []
    for spec in specs:
        rng = random.Random(f"{seed}:{spec['id']}")
        devices.append(
            SimDevice(
                device_id=spec["id"],
                waypoints=[tuple(w) for w in spec["waypoints"]],
                schedule=generate_key_schedule(rng, horizon, start=start),
                infected_at=spec.get("infected_at"),
                consent=bool(spec.get("consent", False)),
            )
        )
    return SimWorld(
        devices=devices,
        tick_minutes=tick_minutes,
        proximity_radius_m=proximity_radius_m,
        rng_seed=seed,
        start=start,
    )


def step(world: SimWorld) -> SimWorld:
    """Advance one tick: co-located pairs (distance ≤ radius) exchange keys
    symmetrically; each sighting is logged at tick start and tick end."""
    now = world.now
    tick_end = now + timedelta(minutes=world.tick_minutes)
    t = world.tick
    devices = world.devices
    for i, a in enumerate(devices):
        pos_a = a.position(t)
        for b in devices[i + 1 :]:
            if math.dist(pos_a, b.position(t)) > world.proximity_radius_m:
                continue
            key_a = active_key(a.schedule, now)
            key_b = active_key(b.schedule, now)
            if key_a is None or key_b is None:
                raise ScenarioError("device schedule does not cover the run")
            a.log = record_encounter(a.log, key_b.value, now)
            a.log = record_encounter(a.log, key_b.value, tick_end)
            b.log = record_encounter(b.log, key_a.value, now)
            b.log = record_encounter(b.log, key_a.value, tick_end)
    world.tick += 1
    return world


def _require(condition: bool, where: str, message: str) -> None:
    if not condition:
        raise ScenarioError(f"{where}: {message}")


def _parse_script(script: dict) -> dict:
    _require(isinstance(script, dict), "script", "expected a JSON object")
    for name in ("devices", "ticks", "seed"):
        _require(name in script, f"script.{name}", "missing required field")
    ticks = script["ticks"]
    _require(isinstance(ticks, int) and ticks >= 0, "script.ticks", "expected int ≥ 0")
    _require(isinstance(script["seed"], int), "script.seed", "expected an integer")
    devices = script["devices"]
    _require(isinstance(devices, list) and devices, "script.devices", "expected a non-empty list")
    for i, spec in enumerate(devices):
        where = f"script.devices[{i}]"
        _require(isinstance(spec, dict), where, "expected an object")
        _require(isinstance(spec.get("id"), str) and spec["id"] != "", f"{where}.id", "expected a non-empty string")
        waypoints = spec.get("waypoints")
        _require(isinstance(waypoints, list) and waypoints, f"{where}.waypoints", "expected a non-empty list")
        for j, wp in enumerate(waypoints):
            _require(
                isinstance(wp, (list, tuple)) and len(wp) == 2
                and all(isinstance(c, (int, float)) for c in wp),
                f"{where}.waypoints[{j}]",
                "expected an [x, y] pair",
            )
    ids = {spec["id"] for spec in devices}
    for i, entry in enumerate(script.get("diagnose", [])):
        where = f"script.diagnose[{i}]"
        _require(isinstance(entry, dict), where, "expected an object")
        _require(entry.get("device") in ids, f"{where}.device", "unknown device id")
        _require(
            isinstance(entry.get("tick"), int) and 0 <= entry["tick"] <= ticks,
            f"{where}.tick",
            f"expected int in [0, {ticks}]",
        )
    check_every = script.get("check_every", 1)
    _require(
        isinstance(check_every, int) and check_every >= 1,
        "script.check_every",
        "expected int ≥ 1",
    )
    return {
        "devices": devices,
        "diagnose": script.get("diagnose", []),
        "check_every": check_every,
        "ticks": ticks,
        "seed": script["seed"],
        "tick_minutes": script.get("tick_minutes", 1),
        "proximity_radius_m": script.get("proximity_radius_m", 10.0),
        "min_match_minutes": script.get("min_match_minutes", DEFAULT_MIN_MATCH_MINUTES),
    }


def run_scenario(script: dict) -> dict:
    """Run a scripted world: scheduled diagnoses upload keys, periodic checks
    run match_exposures per device. The report is reproducible byte-for-byte
    from (seed, script)."""
    parsed = _parse_script(script)
    world = build_world(
        parsed["devices"],
        ticks=parsed["ticks"],
        seed=parsed["seed"],
        tick_minutes=parsed["tick_minutes"],
        proximity_radius_m=parsed["proximity_radius_m"],
    )
    by_id = {d.device_id: d for d in world.devices}
    diagnose_at: dict[int, list[str]] = {}
    for entry in parsed["diagnose"]:
        diagnose_at.setdefault(entry["tick"], []).append(entry["device"])

    registry = KeyRegistry()
    diagnosed: list[dict] = []
    seen: dict[str, set[tuple]] = {d.device_id: set() for d in world.devices}
    notifications: dict[str, list[dict]] = {d.device_id: [] for d in world.devices}

    def apply_diagnoses(tick: int) -> None:
        nonlocal registry
        for device_id in diagnose_at.get(tick, []):
            device = by_id[device_id]
            keys = tuple(k for k in device.schedule if k.valid_from <= world.now)
            upload = DiagnosisUpload(
                keys=keys,
                verification_token=f"verified-{device_id}",
                uploaded_at=world.now,
            )
            registry, excluded = publish_diagnosis(registry, upload)
            diagnosed.append(
                {
                    "device": device_id,
                    "tick": tick,
                    "published_keys": len(keys) - len(excluded),
                    "excluded": excluded,
                }
            )

    def run_checks() -> None:
        snapshot = registry.snapshot(world.now)
        for device in world.devices:
            for n in match_exposures(
                device.log, snapshot, parsed["min_match_minutes"]
            ):
                dedup = (n.matched_key, n.exposure_start, n.exposure_end)
                if dedup in seen[device.device_id]:
                    continue
                seen[device.device_id].add(dedup)
                notifications[device.device_id].append(notification_to_doc(n))

    for t in range(parsed["ticks"]):
        apply_diagnoses(t)
        step(world)
        if world.tick % parsed["check_every"] == 0:
            run_checks()
    apply_diagnoses(parsed["ticks"])
    run_checks()

    return {
        "schema": REPORT_SCHEMA,
        "seed": parsed["seed"],
        "ticks": parsed["ticks"],
        "tick_minutes": parsed["tick_minutes"],
        "proximity_radius_m": parsed["proximity_radius_m"],
        "registry_size": len(registry),
        "diagnosed": diagnosed,
        "devices": {
            d.device_id: {
                "consent": d.consent,
                "infected": d.infected(parsed["ticks"]),
                "encounter_records": len(d.log),
                "encounter_minutes": round(d.log.total_minutes(), 6),
                "notifications": notifications[d.device_id],
            }
            for d in sorted(world.devices, key=lambda d: d.device_id)
        },
    }

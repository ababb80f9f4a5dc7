"""Exposure-notification protocol (core) and its desk-scale simulator (sim)."""

from .core import (  # noqa: F401
    DiagnosisUpload,
    EncounterLog,
    EncounterRecord,
    EnsError,
    EphemeralKey,
    ExposureNotification,
    KeyRegistry,
    false_match_probability,
    generate_key_schedule,
    match_exposures,
    publish_diagnosis,
    record_encounter,
)
from .sim import ScenarioError, SimDevice, SimWorld, build_world, run_scenario, step  # noqa: F401

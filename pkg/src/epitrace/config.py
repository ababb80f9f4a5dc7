"""Service configuration: key=value file, EPITRACE_* env overrides, defaults.

Precedence (low → high): built-in defaults, config file, environment, CLI
flags (applied by the caller via `replace`).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping

ENV_PREFIX = "EPITRACE_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    store_root: str = "store"
    window_days: int = 14
    quarantine_radius_m: float = 500.0
    key_digits: int = 4
    rotation_min_minutes: int = 10
    rotation_max_minutes: int = 20
    min_match_minutes: float = 10.0
    advisory_ttl_days: int = 14
    api_token: str = ""  # empty = auth disabled
    department_webhook: str = ""  # empty = no department notifications
    ui_root: str = ""  # empty = serve /ui only if frontend/dist is found

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ConfigError(f"port {self.port} out of range")
        if self.window_days <= 0:
            raise ConfigError("window_days must be positive")
        if self.quarantine_radius_m <= 0:
            raise ConfigError("quarantine_radius_m must be positive")
        if self.key_digits < 1:
            raise ConfigError("key_digits must be at least 1")
        if not 0 < self.rotation_min_minutes <= self.rotation_max_minutes:
            raise ConfigError("rotation range must satisfy 0 < min ≤ max")
        if self.advisory_ttl_days <= 0:
            raise ConfigError("advisory_ttl_days must be positive")

    @property
    def rotation_minutes(self) -> tuple[int, int]:
        return (self.rotation_min_minutes, self.rotation_max_minutes)


def _coerce(name: str, kind: type, raw: str):
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: expected {kind.__name__}, got {raw!r}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key=value lines; '#' starts a comment; blank lines ignored."""
    types = {f.name: type(getattr(ServiceConfig(), f.name)) for f in fields(ServiceConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip().lower()
        if key not in types:
            raise ConfigError(f"{source}:{lineno}: unknown setting {key!r}")
        values[key] = _coerce(key, types[key], raw)
    return values


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    **overrides,
) -> ServiceConfig:
    """Defaults, then the file at `path`, then EPITRACE_* env, then overrides."""
    values: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        values.update(parse_config_text(text, source=str(path)))
    env = os.environ if env is None else env
    types = {f.name: type(getattr(ServiceConfig(), f.name)) for f in fields(ServiceConfig)}
    for name in types:
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = _coerce(name, types[name], raw)
    config = ServiceConfig(**values)
    filtered = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **filtered) if filtered else config

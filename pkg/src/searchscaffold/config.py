"""Service configuration: one YAML file describing every moving part.

The file names the fixture directories (outlines, concepts, corpus or a
remote search endpoint, blacklist), the log directory, the service seed,
and any scoring/session overrides. Paths are resolved relative to the
config file itself so a checkout works from any working directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .scoring import ScoringConfig
from .session import SessionConfig

#: Environment variable holding an alternative config path.
CONFIG_ENV_VAR = "SCAFFOLD_CONFIG"


@dataclass(frozen=True)
class RemoteBackendConfig:
    endpoint: str
    timeout_s: float = 10.0


@dataclass(frozen=True)
class ServiceConfig:
    outlines_dir: Path
    concepts_dir: Path
    blacklist_path: Path
    log_dir: Path
    attention_topic: str
    corpus_dir: Path | None = None
    remote: RemoteBackendConfig | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    seed: int = 0
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    session: SessionConfig = field(default_factory=SessionConfig)

    def __post_init__(self):
        if (self.corpus_dir is None) == (self.remote is None):
            raise ConfigurationError(
                "exactly one search backend must be configured: corpus_dir or remote"
            )
        for name in ("outlines_dir", "concepts_dir"):
            path = getattr(self, name)
            if not path.is_dir():
                raise ConfigurationError(f"{name} {path} is not a directory")
        if self.corpus_dir is not None and not self.corpus_dir.is_dir():
            raise ConfigurationError(f"corpus_dir {self.corpus_dir} is not a directory")
        if not self.blacklist_path.is_file():
            raise ConfigurationError(f"blacklist {self.blacklist_path} is not a file")
        if not self.attention_topic:
            raise ConfigurationError("attention_topic is required")
        if not 1 <= self.port <= 65535:
            raise ConfigurationError(f"port {self.port} out of range")


def _sub_config(cls, raw: dict | None, where: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{where} must be a mapping")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


def load_config(path: str | Path) -> ServiceConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping")

    base = path.resolve().parent

    def resolve(key: str, required: bool = True) -> Path | None:
        value = raw.get(key)
        if value is None:
            if required:
                raise ConfigurationError(f"config key {key!r} is required")
            return None
        return (base / str(value)).resolve()

    remote = None
    if raw.get("remote") is not None:
        entry = raw["remote"]
        if not isinstance(entry, dict) or "endpoint" not in entry:
            raise ConfigurationError("remote backend needs an endpoint")
        remote = RemoteBackendConfig(
            endpoint=str(entry["endpoint"]),
            timeout_s=float(entry.get("timeout_s", 10.0)),
        )

    log_dir = resolve("log_dir")
    log_dir.mkdir(parents=True, exist_ok=True)  # created, not required to exist

    return ServiceConfig(
        outlines_dir=resolve("outlines_dir"),
        concepts_dir=resolve("concepts_dir"),
        blacklist_path=resolve("blacklist"),
        log_dir=log_dir,
        attention_topic=str(raw.get("attention_topic", "")),
        corpus_dir=resolve("corpus_dir", required=False),
        remote=remote,
        host=str(raw.get("host", "127.0.0.1")),
        port=int(raw.get("port", 8000)),
        seed=int(raw.get("seed", 0)),
        scoring=_sub_config(ScoringConfig, raw.get("scoring"), "scoring"),
        session=_sub_config(SessionConfig, raw.get("session"), "session"),
    )


def config_path_from_env(default: str | Path) -> Path:
    """The config path, honoring the environment override."""
    return Path(os.environ.get(CONFIG_ENV_VAR, str(default)))

"""Service configuration: model boundaries, paths, retrieval knobs.

Configuration comes from a JSON file (``--config`` flag or the MITRA_CONFIG
environment variable); relative paths inside it resolve against the file's
own directory. The allowed-endpoints list is the privacy boundary: every
configured remote endpoint must appear on it, and nothing else is ever
contacted.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlsplit

from .embed import EmbedderConfig
from .errors import ConfigError
from .generate import GenerationConfig
from .rerank import RerankerConfig

ENV_CONFIG_VAR = "MITRA_CONFIG"

DEFAULT_SESSION_IDLE_EXPIRY_S = 24 * 3600.0


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    data_dir: Path = Path("data")
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    reranker: RerankerConfig = field(default_factory=RerankerConfig)
    generator: GenerationConfig = field(default_factory=GenerationConfig)
    k_retrieve: int = 20
    k_final: int = 5
    session_idle_expiry_s: float = DEFAULT_SESSION_IDLE_EXPIRY_S
    allowed_endpoints: tuple[str, ...] = ()
    ui_dir: Path | None = None

    @property
    def corpus_path(self) -> Path:
        return self.data_dir / "corpus_store.jsonl"

    @property
    def index_dir(self) -> Path:
        return self.data_dir / "indexes"

    def remote_endpoints(self) -> list[str]:
        urls = [
            cfg.endpoint_url
            for cfg in (self.embedder, self.reranker, self.generator)
            if cfg.mode == "remote" and cfg.endpoint_url
        ]
        return urls

    def validate(self) -> None:
        if self.k_final < 1 or self.k_retrieve < 1:
            raise ConfigError("k_retrieve and k_final must be >= 1")
        if self.k_final > self.k_retrieve:
            raise ConfigError("k_final must not exceed k_retrieve")
        endpoints = self.remote_endpoints()
        if endpoints and not self.allowed_endpoints:
            # Convenience default: exactly the configured endpoints.
            self.allowed_endpoints = tuple(endpoints)
        allowed_hosts = {urlsplit(u).netloc for u in self.allowed_endpoints}
        for url in endpoints:
            if urlsplit(url).netloc not in allowed_hosts:
                raise ConfigError(f"remote endpoint {url} is not in allowed_endpoints")

    def allowed_hosts(self) -> set[str]:
        return {urlsplit(u).netloc for u in self.allowed_endpoints}


def _parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"listen must look like 'host:port', got {value!r}")
    return host, int(port)


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Load configuration from `path`, MITRA_CONFIG, or built-in defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_VAR) or None
    if path is None:
        config = ServiceConfig()
        config.validate()
        return config

    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")

    base = path.parent.resolve()
    try:
        host, port = _parse_listen(raw.get("listen", "127.0.0.1:8080"))
        embedder_raw = dict(raw.get("embedder", {}))
        reranker_raw = dict(raw.get("reranker", {}))
        generator_raw = dict(raw.get("generator", {}))
        for section in (embedder_raw, reranker_raw):
            section["synonym_table_path"] = _resolve(base, section.get("synonym_table_path"))
        data_dir = Path(_resolve(base, raw.get("data_dir", "data")))
        ui_dir = raw.get("ui_dir")
        config = ServiceConfig(
            listen_host=host,
            listen_port=port,
            data_dir=data_dir,
            embedder=EmbedderConfig(**embedder_raw),
            reranker=RerankerConfig(**reranker_raw),
            generator=GenerationConfig(**generator_raw),
            k_retrieve=int(raw.get("k_retrieve", 20)),
            k_final=int(raw.get("k_final", 5)),
            session_idle_expiry_s=float(
                raw.get("session_idle_expiry_s", DEFAULT_SESSION_IDLE_EXPIRY_S)
            ),
            allowed_endpoints=tuple(raw.get("allowed_endpoints", ())),
            ui_dir=Path(_resolve(base, ui_dir)) if ui_dir else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config {path} is invalid: {exc}") from exc
    config.validate()
    return config


def apply_overrides(
    config: ServiceConfig,
    k_retrieve: int | None = None,
    k_final: int | None = None,
    stub_models: bool = False,
    listen: str | None = None,
) -> ServiceConfig:
    """Apply CLI flag overrides on top of a loaded config."""
    if k_retrieve is not None:
        config.k_retrieve = k_retrieve
    if k_final is not None:
        config.k_final = k_final
        config.reranker.k_final = k_final
    if stub_models:
        config.embedder.mode = "stub"
        config.reranker.mode = "stub"
        config.generator.mode = "stub"
    if listen is not None:
        config.listen_host, config.listen_port = _parse_listen(listen)
    config.validate()
    return config

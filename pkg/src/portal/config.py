"""Daemon configuration: provider selection, ritual parameters, storage, listen
address, channel tokens. Loaded from a TOML file, overridable per field.
"""
from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .providers import (
    DEFAULT_EMBEDDING_DIM,
    DeterministicChatProvider,
    MockEmbeddingProvider,
    MockSpeechProvider,
    MockTranscriptionProvider,
    MockVisionProvider,
    ProviderSet,
)
from .providers.live import (
    HttpChatProvider,
    HttpEmbeddingProvider,
    HttpSpeechProvider,
    HttpTranscriptionProvider,
    HttpVisionProvider,
)

log = logging.getLogger(__name__)

CAPABILITIES = ("vision", "embed", "chat", "speech", "stt")


@dataclass(frozen=True)
class DaemonConfig:
    # "mock" or "live" per capability
    providers: dict = field(default_factory=lambda: {c: "mock" for c in CAPABILITIES})
    provider_urls: dict = field(default_factory=dict)
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    match_threshold: float = 0.85
    awaken_word: str = "awaken"
    goodbye_word: str = "goodbye"
    light_b_min: float = 0.15
    light_b_max: float = 0.9
    light_period_s: float = 4.0
    data_dir: str = ""
    host: str = "127.0.0.1"
    port: int = 8765
    participant_token: str = ""
    operator_token: str = ""
    deterministic: bool = False  # fixed-step clock + sequential ids

    def __post_init__(self):
        unknown = set(self.providers) - set(CAPABILITIES)
        if unknown:
            raise ValueError(f"unknown capabilities {sorted(unknown)}")
        for cap, kind in self.providers.items():
            if kind not in ("mock", "live"):
                raise ValueError(f"provider for {cap} must be 'mock' or 'live'")
        if not 0.0 < self.match_threshold <= 1.0:
            raise ValueError("match_threshold must be in (0, 1]")

    def resolved_data_dir(self) -> Path:
        if self.data_dir:
            return Path(self.data_dir)
        return Path(os.environ.get("PORTAL_DATA_DIR", "./portal-data"))

    def redacted(self) -> dict:
        doc = {
            "providers": dict(self.providers),
            "match_threshold": self.match_threshold,
            "trigger_words": [self.awaken_word, self.goodbye_word],
            "data_dir": str(self.resolved_data_dir()),
            "listen": f"{self.host}:{self.port}",
            "deterministic": self.deterministic,
            "participant_token": "***" if self.participant_token else "",
            "operator_token": "***" if self.operator_token else "",
        }
        return doc


def mock_all_config(data_dir: str = "", **overrides) -> DaemonConfig:
    """All-mock deterministic configuration for desk sessions and tests."""
    return DaemonConfig(
        providers={c: "mock" for c in CAPABILITIES},
        data_dir=data_dir,
        deterministic=True,
        **overrides,
    )


def load_config(path: str | Path) -> DaemonConfig:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    providers = {c: "mock" for c in CAPABILITIES}
    providers.update(doc.get("providers", {}))
    ritual = doc.get("ritual", {})
    light = doc.get("light", {})
    server = doc.get("server", {})
    return DaemonConfig(
        providers=providers,
        provider_urls=doc.get("provider_urls", {}),
        embedding_dim=doc.get("embedding_dim", DEFAULT_EMBEDDING_DIM),
        match_threshold=ritual.get("match_threshold", 0.85),
        awaken_word=ritual.get("awaken_word", "awaken"),
        goodbye_word=ritual.get("goodbye_word", "goodbye"),
        light_b_min=light.get("b_min", 0.15),
        light_b_max=light.get("b_max", 0.9),
        light_period_s=light.get("period_s", 4.0),
        data_dir=doc.get("data_dir", ""),
        host=server.get("host", "127.0.0.1"),
        port=server.get("port", 8765),
        participant_token=server.get("participant_token", ""),
        operator_token=server.get("operator_token", ""),
        deterministic=doc.get("deterministic", False),
    )


def build_providers(config: DaemonConfig) -> ProviderSet:
    urls = config.provider_urls

    def url(cap: str) -> str:
        if cap not in urls:
            raise ValueError(f"live provider {cap!r} needs provider_urls.{cap}")
        return urls[cap]

    kinds = config.providers
    vision = MockVisionProvider() if kinds["vision"] == "mock" else HttpVisionProvider(url("vision"))
    embedder = (
        MockEmbeddingProvider(config.embedding_dim)
        if kinds["embed"] == "mock"
        else HttpEmbeddingProvider(url("embed"))
    )
    chat = DeterministicChatProvider() if kinds["chat"] == "mock" else HttpChatProvider(url("chat"))
    speech = MockSpeechProvider() if kinds["speech"] == "mock" else HttpSpeechProvider(url("speech"))
    stt = (
        MockTranscriptionProvider()
        if kinds["stt"] == "mock"
        else HttpTranscriptionProvider(url("stt"))
    )
    return ProviderSet(vision=vision, embedder=embedder, chat=chat, speech=speech, transcriber=stt)

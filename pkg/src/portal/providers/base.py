"""Provider abstractions: the five external AI capabilities the daemon needs.

Each capability (vision description, image/text embedding, chat completion,
speech synthesis, speech transcription) is a small protocol with a live
HTTP-backed implementation and a deterministic mock. Everything above this
layer is written against the protocols only.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

ALLOWED_MIME_TYPES = ("image/jpeg", "image/png")
DEFAULT_EMBEDDING_DIM = 512


class ErrorKind(Enum):
    TIMEOUT = "timeout"
    AUTH_FAILURE = "auth_failure"
    RATE_LIMITED = "rate_limited"
    MALFORMED_RESPONSE = "malformed_response"
    UNAVAILABLE = "unavailable"


_RETRYABLE_KINDS = frozenset(
    {ErrorKind.TIMEOUT, ErrorKind.RATE_LIMITED, ErrorKind.UNAVAILABLE}
)


class ProviderError(Exception):
    """Failure of an external capability call."""

    def __init__(self, kind: ErrorKind, detail: str = ""):
        super().__init__(f"{kind.value}: {detail}")
        self.kind = kind
        self.detail = detail

    @property
    def retryable(self) -> bool:
        return self.kind in _RETRYABLE_KINDS


class SchemaTag(Enum):
    FREE_TEXT = "free_text"
    PERSONA_SHEET = "persona_sheet"
    TWO_TIER_TURN = "two_tier_turn"


@dataclass(frozen=True)
class VisionRequest:
    image_bytes: bytes
    mime_type: str = "image/jpeg"

    def __post_init__(self):
        if not self.image_bytes:
            raise ValueError("image_bytes must be non-empty")
        if self.mime_type not in ALLOWED_MIME_TYPES:
            raise ValueError(f"unsupported mime_type {self.mime_type!r}")


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    text: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"invalid role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: tuple[ChatMessage, ...]
    response_schema_tag: SchemaTag = SchemaTag.FREE_TEXT

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        # after any leading system entries, roles must alternate user/assistant
        body = [m for m in self.messages]
        i = 0
        while i < len(body) and body[i].role == "system":
            i += 1
        prev = None
        for m in body[i:]:
            if m.role == "system":
                raise ValueError("system messages only allowed at the front")
            if m.role == prev:
                raise ValueError("user/assistant roles must alternate")
            prev = m.role


@dataclass(frozen=True)
class Embedding:
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("embedding must be non-empty")
        if self.norm() == 0.0:
            raise ValueError("embedding must have non-zero norm")

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def normalized(self) -> "Embedding":
        n = self.norm()
        return Embedding(tuple(v / n for v in self.values))


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine of the angle between two embeddings, in [-1, 1]."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    sim = dot / (a.norm() * b.norm())
    return max(-1.0, min(1.0, sim))


@dataclass(frozen=True)
class SpeechRequest:
    text: str
    voice_id: str = "default"
    engine_tag: str = "eleven_turbo_v2_5"

    def __post_init__(self):
        if not self.text:
            raise ValueError("text must be non-empty")


@dataclass(frozen=True)
class SpeechResult:
    audio: bytes
    duration_ms: int

    def __post_init__(self):
        if not self.audio:
            raise ValueError("audio must be non-empty")


class VisionProvider(Protocol):
    def describe_image(self, req: VisionRequest) -> str: ...


class EmbeddingProvider(Protocol):
    def embed_image(self, req: VisionRequest) -> Embedding: ...

    def embed_text(self, text: str) -> Embedding: ...


class ChatProvider(Protocol):
    def chat(self, req: ChatRequest) -> str: ...


class SpeechProvider(Protocol):
    def synthesize_speech(self, req: SpeechRequest) -> SpeechResult: ...


class TranscriptionProvider(Protocol):
    def transcribe(self, audio: bytes) -> str: ...


@dataclass
class ProviderSet:
    """Bound implementations of the five capabilities."""

    vision: VisionProvider
    embedder: EmbeddingProvider
    chat: ChatProvider
    speech: SpeechProvider
    transcriber: TranscriptionProvider


def content_tag(data: bytes) -> str:
    """Stable short tag for a byte payload.

    Short printable payloads tag as themselves (handy for test fixtures);
    anything else tags as a hash prefix.
    """
    if len(data) <= 64:
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            pass
        else:
            if text and text.isprintable():
                return text
    return hashlib.sha256(data).hexdigest()[:12]

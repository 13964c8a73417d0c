"""Deterministic mock providers for offline runs and tests.

Every mock is a pure function of its inputs plus explicit script state:
identical inputs (and scripts) produce byte-identical outputs across runs.
"""
from __future__ import annotations

import hashlib
import io
import random
import threading
import wave

from .base import (
    ChatMessage,
    ChatRequest,
    Embedding,
    ErrorKind,
    ProviderError,
    SchemaTag,
    SpeechRequest,
    SpeechResult,
    VisionRequest,
    content_tag,
    DEFAULT_EMBEDDING_DIM,
)

MOCK_VOICE_IDS = ("warm", "familiar", "playful", "default")

_NAMES = (
    "Murmur", "Ember", "Brindle", "Sora", "Patch", "Wicker",
    "Tansy", "Orin", "Moss", "Juniper", "Fen", "Clatter",
)
_TRAITS = (
    "quiet", "curious", "patient", "wistful", "playful", "stubborn",
    "observant", "gentle", "dramatic", "forgetful", "loyal", "dreamy",
)
_STYLES = (
    "speaks softly and slowly",
    "talks in short bright bursts",
    "drifts into long rambles",
    "asks more than it answers",
)
_MOODS = ("calm", "restless", "content", "melancholy", "expectant")

# Convention: the deterministic chat mock stays silent when the latest
# human utterance contains this word, so tests can exercise the
# silence path on demand.
SILENCE_CUE = "silence"


def _seed(data: bytes, salt: str) -> int:
    h = hashlib.sha256(salt.encode("utf-8") + data).digest()
    return int.from_bytes(h[:8], "little")


class MockVisionProvider:
    """Describes images as a deterministic function of a content hash."""

    def describe_image(self, req: VisionRequest) -> str:
        return f"mock object {content_tag(req.image_bytes)}"


class MockEmbeddingProvider:
    """Hash-seeded pseudo-random unit vectors, reproducible per content."""

    def __init__(self, dim: int = DEFAULT_EMBEDDING_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def _vector(self, data: bytes, salt: str) -> Embedding:
        rng = random.Random(_seed(data, salt))
        values = [rng.gauss(0.0, 1.0) for _ in range(self.dim)]
        return Embedding(tuple(values)).normalized()

    def embed_image(self, req: VisionRequest) -> Embedding:
        return self._vector(req.image_bytes, "image-embed")

    def embed_text(self, text: str) -> Embedding:
        return self._vector(text.encode("utf-8"), "text-embed")


class ScriptedChatProvider:
    """Replays a fixed queue of responses; exhaustion is an Unavailable error.

    The script queue is internally synchronized so concurrent callers see
    each entry exactly once.
    """

    def __init__(self, script: list[str] | None = None):
        self._script = list(script or [])
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    def push(self, *responses: str) -> None:
        with self._lock:
            self._script.extend(responses)

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self.requests)

    def chat(self, req: ChatRequest) -> str:
        with self._lock:
            self.requests.append(req)
            if not self._script:
                raise ProviderError(ErrorKind.UNAVAILABLE, "chat script exhausted")
            return self._script.pop(0)


class DeterministicChatProvider:
    """Schema-aware chat mock: a pure function of the request.

    Produces valid persona sheets, two-tier turns, and free-text summaries
    so whole sessions run offline without hand-written scripts.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    def chat(self, req: ChatRequest) -> str:
        with self._lock:
            self.requests.append(req)
        if req.response_schema_tag is SchemaTag.PERSONA_SHEET:
            return self._persona_sheet(req)
        if req.response_schema_tag is SchemaTag.TWO_TIER_TURN:
            return self._two_tier(req)
        return self._summary(req)

    @staticmethod
    def _last_user_text(req: ChatRequest) -> str:
        for msg in reversed(req.messages):
            if msg.role == "user":
                return msg.text
        return ""

    def _persona_sheet(self, req: ChatRequest) -> str:
        seed = _seed(self._last_user_text(req).encode("utf-8"), "persona")
        rng = random.Random(seed)
        name = rng.choice(_NAMES)
        traits = rng.sample(_TRAITS, k=rng.randint(3, 5))
        return "\n".join(
            [
                f"NAME: {name}",
                f"TRAITS: {', '.join(traits)}",
                f"STYLE: {rng.choice(_STYLES)}",
                f"BACKSTORY: {name} has waited a long time on a shelf, "
                "collecting dust and small hopes.",
                f"VOICE: {rng.choice(MOCK_VOICE_IDS)}",
                f"MOOD: {rng.choice(_MOODS)}",
            ]
        )

    def _two_tier(self, req: ChatRequest) -> str:
        utterance = self._last_user_text(req)
        h = _seed(utterance.encode("utf-8"), "turn") % 1000
        inner = f"(inner#{h:03d}) weighing whether to answer '{utterance}'"
        if SILENCE_CUE in utterance.lower():
            return f"INNER: {inner}\nINTENT: 0.12\nSPEAK: no\nRESPONSE:"
        reply = f"You said '{utterance}', and I have been thinking about it."
        return f"INNER: {inner}\nINTENT: 0.84\nSPEAK: yes\nRESPONSE: {reply}"

    def _summary(self, req: ChatRequest) -> str:
        text = self._last_user_text(req)
        h = _seed(text.encode("utf-8"), "summary") % 1000
        turns = text.count("\n") + 1 if text else 0
        return f"a conversation of {turns} lines (digest {h:03d})"


class MockSpeechProvider:
    """Silent WAV audio, 10 ms per character of input text."""

    SAMPLE_RATE = 16_000

    def __init__(self):
        self.requests: list[SpeechRequest] = []
        self._lock = threading.Lock()

    def synthesize_speech(self, req: SpeechRequest) -> SpeechResult:
        with self._lock:
            self.requests.append(req)
        duration_ms = 10 * len(req.text)
        n_frames = duration_ms * self.SAMPLE_RATE // 1000
        buf = io.BytesIO()
        with wave.open(buf, "wb") as wav:
            wav.setnchannels(1)
            wav.setsampwidth(2)
            wav.setframerate(self.SAMPLE_RATE)
            wav.writeframes(b"\x00\x00" * n_frames)
        return SpeechResult(audio=buf.getvalue(), duration_ms=duration_ms)


class MockTranscriptionProvider:
    """Maps tagged audio fixtures to fixed transcripts."""

    def __init__(self, fixtures: dict[str, str] | None = None):
        self.fixtures = dict(fixtures or {"awaken.wav": "awaken", "silence.wav": ""})

    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise ValueError("audio must be non-empty")
        tag = content_tag(audio)
        if tag not in self.fixtures:
            raise ProviderError(ErrorKind.UNAVAILABLE, f"no fixture for {tag!r}")
        return self.fixtures[tag]

"""The ritual state machine: Request (awaken + identity), Conversation
(dialogue turns), Transformation (goodbye, summary, reflection), back to Idle.

All mutating entry points serialize through one lock, so the engine behaves
as a single-writer event loop no matter which frontend (HTTP, CLI, audio)
submits events.
"""
from __future__ import annotations

import importlib.resources
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Callable, Protocol

from . import lights
from .clockid import Clock, IdFactory, isoformat, parse_timestamp
from .dialogue import (
    HISTORY_WINDOW,
    RELEVANT_WINDOW,
    TRANSCRIPT_TAIL_TURNS,
    PromptContext,
    generate_turn,
)
from .identity import ObjectProfile, ObjectRegistry, resolve_identity
from .memory import SPEAKER_HUMAN, SPEAKER_OBJECT, MemoryStore
from .persistence import ImageArchive, SessionLogStore, StorageError
from .providers import ProviderError, ProviderSet, SpeechRequest, VisionRequest

log = logging.getLogger(__name__)

DEFAULT_AWAKEN_WORD = "awaken"
DEFAULT_GOODBYE_WORD = "goodbye"

APOLOGY_TEXT = "... the connection wavers; the object cannot find its voice right now."

SPEAKER_PORTAL = "portal"


class Phase(Enum):
    IDLE = "idle"
    REQUEST = "request"
    CONVERSATION = "conversation"
    TRANSFORMATION = "transformation"


class EventKind(Enum):
    KEYWORD_AWAKEN = "keyword_awaken"
    KEYWORD_GOODBYE = "keyword_goodbye"
    IDENTITY_RESOLVED = "identity_resolved"
    TURN_COMPLETED = "turn_completed"
    SUMMARY_STORED = "summary_stored"
    UTTERANCE = "utterance"
    ERROR = "error"


_TRANSITIONS: dict[tuple[Phase, EventKind], Phase] = {
    (Phase.IDLE, EventKind.KEYWORD_AWAKEN): Phase.REQUEST,
    (Phase.REQUEST, EventKind.IDENTITY_RESOLVED): Phase.CONVERSATION,
    (Phase.CONVERSATION, EventKind.KEYWORD_GOODBYE): Phase.TRANSFORMATION,
    (Phase.TRANSFORMATION, EventKind.SUMMARY_STORED): Phase.IDLE,
}


def transition(phase: Phase, event: EventKind) -> Phase:
    """Total transition function; unhandled pairs leave the phase unchanged."""
    if event is EventKind.ERROR:
        return Phase.IDLE
    return _TRANSITIONS.get((phase, event), phase)


class Trigger(Enum):
    AWAKEN = "awaken"
    GOODBYE = "goodbye"


def detect_keyword(
    transcript_text: str,
    awaken_word: str = DEFAULT_AWAKEN_WORD,
    goodbye_word: str = DEFAULT_GOODBYE_WORD,
) -> Trigger | None:
    """Case-insensitive whole-word trigger match; goodbye wins when both appear."""
    def present(word: str) -> bool:
        return re.search(rf"\b{re.escape(word)}\b", transcript_text, re.IGNORECASE) is not None

    if present(goodbye_word):
        return Trigger.GOODBYE
    if present(awaken_word):
        return Trigger.AWAKEN
    return None


@dataclass
class TranscriptEntry:
    speaker: str  # human | object | portal
    text: str | None  # None marks a silence event
    silence: bool
    ts: datetime

    def to_document(self) -> dict:
        return {
            "speaker": self.speaker,
            "text": self.text,
            "silence": self.silence,
            "ts": isoformat(self.ts),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "TranscriptEntry":
        return cls(doc["speaker"], doc["text"], doc["silence"], parse_timestamp(doc["ts"]))


@dataclass
class RitualSession:
    session_id: str
    started_at: datetime
    object: ObjectProfile | None = None
    transcript: list[TranscriptEntry] = field(default_factory=list)
    inner_entries: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    ended_at: datetime | None = None
    summary_ref: str | None = None
    summary_skipped: bool = False
    aborted: bool = False

    def to_document(self) -> dict:
        return {
            "version": 1,
            "session_id": self.session_id,
            "object_id": self.object.object_id if self.object else None,
            "started_at": isoformat(self.started_at),
            "ended_at": isoformat(self.ended_at) if self.ended_at else None,
            "aborted": self.aborted,
            "transcript": [e.to_document() for e in self.transcript],
            "inner_thoughts": list(self.inner_entries),
            "summary_ref": self.summary_ref,
            "summary_skipped": self.summary_skipped,
            "errors": list(self.errors),
        }


def transcript_from_log(document: dict) -> list[TranscriptEntry]:
    return [TranscriptEntry.from_document(d) for d in document["transcript"]]


class CameraError(Exception):
    pass


class CameraSource(Protocol):
    def capture(self) -> bytes: ...


class FixtureCameraSource:
    """Serves queued image payloads; empty queue means the camera is unavailable."""

    def __init__(self, *payloads: bytes):
        self._queue = list(payloads)

    def push(self, payload: bytes) -> None:
        self._queue.append(payload)

    def capture(self) -> bytes:
        if not self._queue:
            raise CameraError("no image available")
        return self._queue.pop(0)


# emit(kind, payload, operator_only)
EventListener = Callable[[str, dict, bool], None]


def reflection_text() -> str:
    return (
        importlib.resources.files("portal.assets")
        .joinpath("reflection.txt")
        .read_text(encoding="utf-8")
        .strip()
    )


class RitualEngine:
    def __init__(
        self,
        providers: ProviderSet,
        registry: ObjectRegistry,
        memory: MemoryStore,
        session_store: SessionLogStore,
        image_archive: ImageArchive | None = None,
        camera: CameraSource | None = None,
        light: lights.LightController | None = None,
        clock: Clock | None = None,
        id_factory: IdFactory | None = None,
        listener: EventListener | None = None,
        threshold: float = 0.85,
        awaken_word: str = DEFAULT_AWAKEN_WORD,
        goodbye_word: str = DEFAULT_GOODBYE_WORD,
        breathing_pattern: lights.LightPattern = lights.BREATHING,
    ):
        self.providers = providers
        self.registry = registry
        self.memory = memory
        self.session_store = session_store
        self.image_archive = image_archive
        self.camera = camera
        self.light = light or lights.LightController()
        self.clock = clock or Clock()
        self.ids = id_factory or IdFactory()
        self.listener = listener
        self.threshold = threshold
        self.awaken_word = awaken_word
        self.goodbye_word = goodbye_word
        self.breathing_pattern = breathing_pattern
        self._lock = threading.RLock()
        self.phase = Phase.IDLE
        self.session: RitualSession | None = None

    # -- event plumbing ----------------------------------------------------

    def _emit(self, kind: str, payload: dict, operator_only: bool = False) -> None:
        if self.listener is not None:
            self.listener(kind, payload, operator_only)

    def _set_phase(self, event: EventKind) -> None:
        new_phase = transition(self.phase, event)
        if new_phase is self.phase:
            return
        self.phase = new_phase
        if new_phase is Phase.REQUEST:
            self._set_light(lights.STEADY_BRIGHT)
        elif new_phase is Phase.CONVERSATION:
            self._set_light(self.breathing_pattern)
        else:
            self._set_light(lights.OFF)
        self._emit("PhaseChanged", {"phase": new_phase.value})

    def _set_light(self, pattern: lights.LightPattern) -> None:
        self.light.set_pattern(pattern)
        self._emit(
            "LightSample",
            {
                "mode": pattern.mode.value,
                "b_min": pattern.b_min,
                "b_max": pattern.b_max,
                "period_s": pattern.period_s,
                "brightness": lights.brightness_at(pattern, 0.0),
            },
        )

    def _append_transcript(self, speaker: str, text: str | None, silence: bool = False) -> TranscriptEntry:
        assert self.session is not None
        entry = TranscriptEntry(speaker, text, silence, self.clock.now())
        self.session.transcript.append(entry)
        self._emit("TranscriptAppended", entry.to_document())
        return entry

    # -- entry points --------------------------------------------------------

    def detect(self, text: str) -> Trigger | None:
        return detect_keyword(text, self.awaken_word, self.goodbye_word)

    def handle_utterance(self, text: str) -> dict:
        """Route one human utterance through the ritual. Returns a result summary."""
        if not text:
            raise ValueError("utterance must be non-empty")
        with self._lock:
            trigger = self.detect(text)
            if trigger is Trigger.AWAKEN:
                return self.awaken()
            if trigger is Trigger.GOODBYE:
                return self.goodbye()
            if self.phase is Phase.CONVERSATION:
                return self._conversation_turn(text)
            return {"status": "ignored", "phase": self.phase.value}

    def handle_audio(self, audio: bytes) -> dict:
        """Transcribe a microphone payload, then treat it as an utterance."""
        text = self.providers.transcriber.transcribe(audio)
        if not text:
            return {"status": "ignored", "phase": self.phase.value}
        return self.handle_utterance(text)

    def awaken(self, image_bytes: bytes | None = None) -> dict:
        with self._lock:
            if self.phase is not Phase.IDLE:
                # a second awaken during an active session is a no-op
                return {"status": "ignored", "phase": self.phase.value}
            session = RitualSession(
                session_id=self.ids.new_id("ses"), started_at=self.clock.now()
            )
            self.session = session
            self._set_phase(EventKind.KEYWORD_AWAKEN)
            try:
                if image_bytes is None:
                    if self.camera is None:
                        raise CameraError("no camera bound")
                    image_bytes = self.camera.capture()
                request = VisionRequest(image_bytes=image_bytes)
                archive = self.image_archive.archive if self.image_archive else None
                profile, was_new = resolve_identity(
                    request,
                    self.providers,
                    self.registry,
                    threshold=self.threshold,
                    clock=self.clock,
                    id_factory=self.ids,
                    archive_image=archive,
                )
            except Exception as exc:
                return self._abort(f"request phase failed: {exc}")
            session.object = profile
            self._emit(
                "ObjectBound",
                {
                    "object_id": profile.object_id,
                    "name": profile.persona.name,
                    "description": profile.description,
                    "was_new": was_new,
                },
            )
            self._set_phase(EventKind.IDENTITY_RESOLVED)
            return {
                "status": "awakened",
                "phase": self.phase.value,
                "session_id": session.session_id,
                "object_id": profile.object_id,
                "name": profile.persona.name,
                "was_new": was_new,
            }

    def _conversation_turn(self, text: str) -> dict:
        session = self.session
        assert session is not None and session.object is not None
        profile = session.object
        tail = tuple(
            (e.speaker, e.text)
            for e in session.transcript[-TRANSCRIPT_TAIL_TURNS:]
            if e.text is not None
        )
        self._append_transcript(SPEAKER_HUMAN, text)
        try:
            self.memory.store_memory(
                profile.object_id, session.session_id, SPEAKER_HUMAN, text, self.providers
            )
            ctx = PromptContext(
                persona=profile.persona,
                history_window=tuple(
                    self.memory.retrieve_history(profile.object_id, HISTORY_WINDOW)
                ),
                relevant_memories=tuple(
                    self.memory.retrieve_relevant(
                        profile.object_id, text, RELEVANT_WINDOW, self.providers
                    )
                ),
                transcript_tail=tail,
                human_utterance=text,
            )
            turn = generate_turn(ctx, self.providers)
        except (ProviderError, StorageError) as exc:
            # turn skipped: apology logged, phase unchanged
            session.errors.append(f"turn failed: {exc}")
            self._append_transcript(SPEAKER_PORTAL, APOLOGY_TEXT)
            return {"status": "turn_failed", "phase": self.phase.value, "spoke": False}
        session.inner_entries.append(
            {
                "ts": isoformat(self.clock.now()),
                "text": turn.inner_thoughts,
                "intent": turn.engagement_intent,
            }
        )
        self._emit(
            "InnerThoughts",
            {"text": turn.inner_thoughts, "intent": turn.engagement_intent},
            operator_only=True,
        )
        if turn.speak:
            self.memory.store_memory(
                profile.object_id,
                session.session_id,
                SPEAKER_OBJECT,
                turn.public_response,
                self.providers,
            )
            speech = self.providers.speech.synthesize_speech(
                SpeechRequest(text=turn.public_response, voice_id=profile.persona.voice_id)
            )
            self._append_transcript(SPEAKER_OBJECT, turn.public_response)
            return {
                "status": "turn_completed",
                "phase": self.phase.value,
                "spoke": True,
                "response": turn.public_response,
                "audio_duration_ms": speech.duration_ms,
            }
        self._append_transcript(SPEAKER_OBJECT, None, silence=True)
        return {"status": "turn_completed", "phase": self.phase.value, "spoke": False}

    def goodbye(self) -> dict:
        with self._lock:
            if self.phase is not Phase.CONVERSATION:
                return {"status": "ignored", "phase": self.phase.value}
            session = self.session
            assert session is not None and session.object is not None
            profile = session.object
            self._set_phase(EventKind.KEYWORD_GOODBYE)
            # summary (skipped, not fatal, when the session had no turns or the call fails)
            turns = self.memory.session_turns(profile.object_id, session.session_id)
            if turns:
                try:
                    summary = self.memory.summarize_session(
                        profile.object_id, session.session_id, self.providers
                    )
                    session.summary_ref = summary.memory_id
                except ProviderError as exc:
                    session.summary_skipped = True
                    session.errors.append(f"summary skipped: {exc}")
                    log.warning("session %s summary skipped: %s", session.session_id, exc)
            else:
                session.summary_skipped = True
            # farewell reflection prompt, spoken aloud
            reflection = reflection_text()
            self.providers.speech.synthesize_speech(
                SpeechRequest(text=reflection, voice_id=profile.persona.voice_id)
            )
            self._append_transcript(SPEAKER_PORTAL, reflection)
            session.ended_at = self.clock.now()
            log_path = self.session_store.write(session.session_id, session.to_document())
            self._set_phase(EventKind.SUMMARY_STORED)
            self._emit(
                "SessionClosed",
                {
                    "session_id": session.session_id,
                    "aborted": False,
                    "summary_skipped": session.summary_skipped,
                    "log_path": str(log_path),
                },
            )
            self.session = None
            return {"status": "closed", "phase": self.phase.value,
                    "session_id": session.session_id}

    def _abort(self, reason: str) -> dict:
        session = self.session
        assert session is not None
        session.aborted = True
        session.errors.append(reason)
        session.ended_at = self.clock.now()
        try:
            self.session_store.write(session.session_id, session.to_document())
        except StorageError:
            log.exception("could not persist aborted session %s", session.session_id)
        self._set_phase(EventKind.ERROR)
        self._emit(
            "SessionClosed",
            {"session_id": session.session_id, "aborted": True, "reason": reason},
        )
        self.session = None
        log.error("session aborted: %s", reason)
        return {"status": "aborted", "phase": self.phase.value, "reason": reason}

    # -- introspection -------------------------------------------------------

    def state(self) -> dict:
        with self._lock:
            snapshot: dict = {"phase": self.phase.value}
            pattern = self.light.pattern
            snapshot["light"] = {
                "mode": pattern.mode.value,
                "b_min": pattern.b_min,
                "b_max": pattern.b_max,
                "period_s": pattern.period_s,
            }
            if self.session is not None:
                snapshot["session_id"] = self.session.session_id
                snapshot["transcript"] = [e.to_document() for e in self.session.transcript]
                if self.session.object is not None:
                    obj = self.session.object
                    snapshot["object"] = {
                        "object_id": obj.object_id,
                        "name": obj.persona.name,
                        "description": obj.description,
                        "traits": list(obj.persona.traits),
                    }
            return snapshot

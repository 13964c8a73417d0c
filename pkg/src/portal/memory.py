"""Per-object episodic memory: store turns as semantic vectors, retrieve
chronologically (history) or by relevance (search), summarize at session end.
"""
from __future__ import annotations

import importlib.resources
from datetime import datetime
from typing import Sequence

from .clockid import Clock, IdFactory
from .identity import ObjectRegistry
from .persistence import MemoryFileStore, StoredMemory
from .providers import (
    ChatMessage,
    ChatRequest,
    ProviderSet,
    SchemaTag,
    cosine_similarity,
)

SPEAKER_HUMAN = "human"
SPEAKER_OBJECT = "object"
SUMMARY_PREFIX = "[summary] "


class MemoryStore:
    def __init__(self, files: MemoryFileStore, registry: ObjectRegistry,
                 clock: Clock | None = None, id_factory: IdFactory | None = None):
        self._files = files
        self._registry = registry
        self._clock = clock or Clock()
        self._ids = id_factory or IdFactory()

    def store_memory(self, object_id: str, session_id: str, speaker: str,
                     text: str, providers: ProviderSet) -> StoredMemory:
        if not text:
            raise ValueError("memory text must be non-empty")
        if speaker not in (SPEAKER_HUMAN, SPEAKER_OBJECT):
            raise ValueError(f"invalid speaker {speaker!r}")
        if self._registry.get(object_id) is None:
            raise ValueError(f"unknown object_id {object_id}")
        record = StoredMemory(
            memory_id=self._ids.new_id("mem"),
            object_id=object_id,
            session_id=session_id,
            speaker=speaker,
            text=text,
            embedding=providers.embedder.embed_text(text),
            created_at=self._clock.now(),
        )
        self._files.append(record)
        return record

    def retrieve_history(self, object_id: str, limit: int) -> list[StoredMemory]:
        """The `limit` most recent records, in ascending chronological order."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        records = self._files.load(object_id)
        return records[-limit:]

    def retrieve_relevant(self, object_id: str, query_text: str, limit: int,
                          providers: ProviderSet) -> list[tuple[StoredMemory, float]]:
        """Top records by cosine similarity to the query, newest first on ties."""
        if not query_text:
            raise ValueError("query_text must be non-empty")
        if limit < 1:
            raise ValueError("limit must be >= 1")
        query = providers.embedder.embed_text(query_text)
        records = self._files.load(object_id)
        scored = [(rec, cosine_similarity(query, rec.embedding)) for rec in records]
        # stable sort on descending (score, created_at) puts newer records first on ties
        scored.sort(key=lambda pair: (pair[1], pair[0].created_at), reverse=True)
        return scored[:limit]

    def session_turns(self, object_id: str, session_id: str) -> list[StoredMemory]:
        return [
            rec for rec in self._files.load(object_id)
            if rec.session_id == session_id and not rec.text.startswith(SUMMARY_PREFIX)
        ]

    def summarize_session(self, object_id: str, session_id: str,
                          providers: ProviderSet) -> StoredMemory:
        """Condense a session's turns through one chat call; store as a summary record."""
        turns = self.session_turns(object_id, session_id)
        if not turns:
            raise ValueError("session has no turns to summarize")
        transcript = "\n".join(f"{t.speaker}: {t.text}" for t in turns)
        prompt = (
            importlib.resources.files("portal.assets")
            .joinpath("summary_prompt.txt")
            .read_text(encoding="utf-8")
        )
        summary = providers.chat.chat(
            ChatRequest(
                system_prompt=prompt,
                messages=(ChatMessage("user", transcript),),
                response_schema_tag=SchemaTag.FREE_TEXT,
            )
        )
        return self.store_memory(
            object_id, session_id, SPEAKER_OBJECT,
            SUMMARY_PREFIX + summary.strip(), providers,
        )

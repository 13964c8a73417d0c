"""File-backed persistence: profiles, memories, session logs, archived images.

Everything is line-delimited JSON under a plain directory tree; the registry
file is rewritten atomically (write-temp-then-rename) so a crash at any
point leaves either the old or the new version on disk, never a torn one.
"""
from __future__ import annotations

import base64
import json
import logging
import os
import struct
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from .clockid import isoformat, parse_timestamp
from .identity import ObjectProfile, Persona
from .providers import Embedding

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ENV_DATA_DIR = "PORTAL_DATA_DIR"
DEFAULT_DATA_DIR = "./portal-data"


class StorageError(Exception):
    pass


@dataclass(frozen=True)
class StoreLayout:
    root_dir: Path
    registry_file: Path
    memories_dir: Path
    sessions_dir: Path
    images_dir: Path

    @classmethod
    def at(cls, root: str | Path) -> "StoreLayout":
        root = Path(root)
        return cls(
            root_dir=root,
            registry_file=root / "registry.jsonl",
            memories_dir=root / "memories",
            sessions_dir=root / "sessions",
            images_dir=root / "images",
        )

    def initialize(self) -> "StoreLayout":
        for d in (self.root_dir, self.memories_dir, self.sessions_dir, self.images_dir):
            d.mkdir(parents=True, exist_ok=True)
        return self


def encode_embedding(emb: Embedding) -> str:
    """Little-endian float32 values, base64-encoded."""
    return base64.b64encode(
        struct.pack(f"<{emb.dim}f", *emb.values)
    ).decode("ascii")


def decode_embedding(b64: str, dim: int) -> Embedding:
    raw = base64.b64decode(b64)
    values = struct.unpack(f"<{dim}f", raw)
    return Embedding(tuple(float(v) for v in values))


def profile_to_record(profile: ObjectProfile) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "object_id": profile.object_id,
        "description": profile.description,
        "persona": {
            "name": profile.persona.name,
            "traits": list(profile.persona.traits),
            "speaking_style": profile.persona.speaking_style,
            "backstory": profile.persona.backstory,
            "voice_id": profile.persona.voice_id,
            "mood_seed": profile.persona.mood_seed,
        },
        "embedding_dim": profile.embedding.dim,
        "embedding_b64": encode_embedding(profile.embedding),
        "created_at": isoformat(profile.created_at),
        "last_seen_at": isoformat(profile.last_seen_at),
        "image_refs": list(profile.image_refs),
    }


def profile_from_record(record: dict) -> ObjectProfile:
    persona = record["persona"]
    return ObjectProfile(
        object_id=record["object_id"],
        description=record["description"],
        persona=Persona(
            name=persona["name"],
            traits=tuple(persona["traits"]),
            speaking_style=persona["speaking_style"],
            backstory=persona["backstory"],
            voice_id=persona["voice_id"],
            mood_seed=persona["mood_seed"],
        ),
        embedding=decode_embedding(record["embedding_b64"], record["embedding_dim"]),
        created_at=parse_timestamp(record["created_at"]),
        last_seen_at=parse_timestamp(record["last_seen_at"]),
        image_refs=list(record["image_refs"]),
    )


class ProfileStore:
    """Registry of object profiles: one JSON document per line, upsert on save.

    fault_hook, when set, is called with a named write point before/after
    each step of the atomic rewrite; tests raise from it to simulate crashes.
    """

    WRITE_POINTS = ("before_temp_write", "after_temp_write", "after_flush", "after_rename")

    def __init__(self, layout: StoreLayout,
                 fault_hook: Callable[[str], None] | None = None):
        self.layout = layout.initialize()
        self.fault_hook = fault_hook
        self._lock = threading.Lock()

    def _hook(self, point: str) -> None:
        if self.fault_hook is not None:
            self.fault_hook(point)

    def load_all(self) -> list[ObjectProfile]:
        path = self.layout.registry_file
        if not path.exists():
            return []
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StorageError(f"cannot read registry: {exc}") from exc
        profiles = []
        for i, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                profiles.append(profile_from_record(json.loads(line)))
            except (ValueError, KeyError, struct.error) as exc:
                log.warning("skipping corrupt registry record at line %d: %s", i, exc)
        return profiles

    def save_profile(self, profile: ObjectProfile) -> None:
        with self._lock:
            current = {p.object_id: p for p in self.load_all()}
            current[profile.object_id] = profile
            lines = [
                json.dumps(profile_to_record(p), sort_keys=True, ensure_ascii=True)
                for p in current.values()
            ]
            payload = "\n".join(lines) + "\n"
            tmp = self.layout.registry_file.with_suffix(".jsonl.tmp")
            try:
                self._hook("before_temp_write")
                with open(tmp, "w", encoding="utf-8") as fh:
                    fh.write(payload)
                    self._hook("after_temp_write")
                    fh.flush()
                    os.fsync(fh.fileno())
                self._hook("after_flush")
                os.replace(tmp, self.layout.registry_file)
                self._hook("after_rename")
            except OSError as exc:
                raise StorageError(f"cannot write registry: {exc}") from exc


@dataclass(frozen=True)
class StoredMemory:
    memory_id: str
    object_id: str
    session_id: str
    speaker: str  # human | object
    text: str
    embedding: Embedding
    created_at: datetime


class MemoryFileStore:
    """Append-only per-object memory files under memories_dir."""

    def __init__(self, layout: StoreLayout):
        self.layout = layout.initialize()

    def _path(self, object_id: str) -> Path:
        return self.layout.memories_dir / f"{object_id}.jsonl"

    def append(self, record: StoredMemory) -> None:
        doc = {
            "version": SCHEMA_VERSION,
            "memory_id": record.memory_id,
            "object_id": record.object_id,
            "session_id": record.session_id,
            "speaker": record.speaker,
            "text": record.text,
            "embedding_dim": record.embedding.dim,
            "embedding_b64": encode_embedding(record.embedding),
            "created_at": isoformat(record.created_at),
        }
        try:
            with open(self._path(record.object_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(doc, sort_keys=True, ensure_ascii=True) + "\n")
                fh.flush()
        except OSError as exc:
            raise StorageError(f"cannot append memory: {exc}") from exc

    def load(self, object_id: str) -> list[StoredMemory]:
        path = self._path(object_id)
        if not path.exists():
            return []
        records = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            records.append(
                StoredMemory(
                    memory_id=doc["memory_id"],
                    object_id=doc["object_id"],
                    session_id=doc["session_id"],
                    speaker=doc["speaker"],
                    text=doc["text"],
                    embedding=decode_embedding(doc["embedding_b64"], doc["embedding_dim"]),
                    created_at=parse_timestamp(doc["created_at"]),
                )
            )
        return records


class SessionLogStore:
    """Write-once session logs; existing logs are never overwritten."""

    def __init__(self, layout: StoreLayout):
        self.layout = layout.initialize()

    def _path(self, session_id: str) -> Path:
        return self.layout.sessions_dir / f"{session_id}.json"

    def write(self, session_id: str, document: dict) -> Path:
        path = self._path(session_id)
        if path.exists():
            raise StorageError(f"session log {session_id} already exists")
        tmp = path.with_suffix(".json.tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(document, fh, sort_keys=True, ensure_ascii=True, indent=1)
                fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot write session log: {exc}") from exc
        return path

    def read(self, session_id: str) -> dict:
        return json.loads(self._path(session_id).read_text(encoding="utf-8"))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.layout.sessions_dir.glob("*.json"))


class ImageArchive:
    """Append-only archive of recognition images, one directory per object."""

    def __init__(self, layout: StoreLayout):
        self.layout = layout.initialize()

    def archive(self, object_id: str, image_bytes: bytes, timestamp: datetime) -> str:
        obj_dir = self.layout.images_dir / object_id
        obj_dir.mkdir(parents=True, exist_ok=True)
        stamp = timestamp.strftime("%Y%m%dT%H%M%S.%f")
        name = f"{stamp}.bin"
        n = 1
        while (obj_dir / name).exists():
            name = f"{stamp}-{n}.bin"
            n += 1
        path = obj_dir / name
        try:
            path.write_bytes(image_bytes)
        except OSError as exc:
            raise StorageError(f"cannot archive image: {exc}") from exc
        return f"{object_id}/{name}"

    def read(self, ref: str) -> bytes:
        return (self.layout.images_dir / ref).read_bytes()

"""Object identity: embedding similarity search over a profile registry,
with persona generation on a first meeting.
"""
from __future__ import annotations

import importlib.resources
import logging
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Callable

from .clockid import Clock, IdFactory
from .providers import (
    ChatMessage,
    ChatRequest,
    Embedding,
    ErrorKind,
    ProviderError,
    ProviderSet,
    SchemaTag,
    VisionRequest,
    cosine_similarity,
)

log = logging.getLogger(__name__)

DEFAULT_MATCH_THRESHOLD = 0.85


class PersonaGenerationError(Exception):
    """Model failed to produce a parseable persona sheet after a retry."""


@dataclass(frozen=True)
class Persona:
    name: str
    traits: tuple[str, ...]
    speaking_style: str
    backstory: str
    voice_id: str
    mood_seed: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("persona name must be non-empty")
        if not 3 <= len(self.traits) <= 7:
            raise ValueError("persona must have 3-7 traits")


@dataclass
class ObjectProfile:
    object_id: str
    description: str
    persona: Persona
    embedding: Embedding
    created_at: datetime
    last_seen_at: datetime
    image_refs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.created_at > self.last_seen_at:
            raise ValueError("created_at must not exceed last_seen_at")


class MatchOutcome(Enum):
    MATCHED = "matched"
    NEW_OBJECT = "new_object"


@dataclass(frozen=True)
class MatchResult:
    outcome: MatchOutcome
    object_id: str
    threshold: float
    similarity: float | None = None  # set only when matched

    def __post_init__(self):
        if self.outcome is MatchOutcome.MATCHED:
            assert self.similarity is not None
            if self.similarity < self.threshold:
                raise ValueError("matched similarity below threshold")


def match_object(
    query: Embedding,
    profiles: list[ObjectProfile],
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    id_factory: IdFactory | None = None,
) -> MatchResult:
    """Linear-scan argmax over the registry; ties broken by earliest created_at.

    Below-threshold maxima (and an empty registry) mint a fresh object id;
    the profile itself is not persisted here.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    best: ObjectProfile | None = None
    best_sim = float("-inf")
    for profile in profiles:
        sim = cosine_similarity(query, profile.embedding)
        if sim > best_sim or (sim == best_sim and best is not None
                              and profile.created_at < best.created_at):
            best, best_sim = profile, sim
    if best is not None and best_sim >= threshold:
        return MatchResult(MatchOutcome.MATCHED, best.object_id, threshold, best_sim)
    new_id = (id_factory or IdFactory()).new_id("obj")
    return MatchResult(MatchOutcome.NEW_OBJECT, new_id, threshold)


def _sheet_lines(raw: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for line in raw.strip().splitlines():
        line = line.strip()
        if ":" not in line:
            continue
        key, _, value = line.partition(":")
        fields[key.strip().upper()] = value.strip()
    return fields


def parse_persona_sheet(raw: str, default_voice: str = "default") -> Persona:
    """Parse the NAME/TRAITS/STYLE/BACKSTORY/VOICE/MOOD sheet format."""
    fields = _sheet_lines(raw)
    missing = [k for k in ("NAME", "TRAITS", "STYLE", "BACKSTORY") if k not in fields]
    if missing:
        raise ProviderError(
            ErrorKind.MALFORMED_RESPONSE, f"persona sheet missing {missing}"
        )
    traits = tuple(t.strip() for t in fields["TRAITS"].split(",") if t.strip())
    try:
        return Persona(
            name=fields["NAME"],
            traits=traits,
            speaking_style=fields["STYLE"],
            backstory=fields["BACKSTORY"],
            voice_id=fields.get("VOICE") or default_voice,
            mood_seed=fields.get("MOOD", "calm"),
        )
    except ValueError as exc:
        raise ProviderError(ErrorKind.MALFORMED_RESPONSE, str(exc)) from exc


def _persona_prompt(description: str) -> str:
    template = (
        importlib.resources.files("portal.assets")
        .joinpath("persona_prompt.txt")
        .read_text(encoding="utf-8")
    )
    return template.replace("{description}", description)


def generate_persona(description: str, providers: ProviderSet) -> Persona:
    """One chat call parsed as a persona sheet; one corrective retry on bad output."""
    if not description:
        raise ValueError("description must be non-empty")
    request = ChatRequest(
        system_prompt=_persona_prompt(description),
        messages=(ChatMessage("user", description),),
        response_schema_tag=SchemaTag.PERSONA_SHEET,
    )
    raw = providers.chat.chat(request)
    try:
        return parse_persona_sheet(raw)
    except ProviderError as first_err:
        if first_err.kind is not ErrorKind.MALFORMED_RESPONSE:
            raise
        retry = ChatRequest(
            system_prompt=request.system_prompt,
            messages=(
                ChatMessage("user", description),
                ChatMessage("assistant", raw),
                ChatMessage(
                    "user",
                    "That was not a valid sheet. Reply with exactly the "
                    "NAME/TRAITS/STYLE/BACKSTORY/VOICE/MOOD lines and nothing else.",
                ),
            ),
            response_schema_tag=SchemaTag.PERSONA_SHEET,
        )
        raw2 = providers.chat.chat(retry)
        try:
            return parse_persona_sheet(raw2)
        except ProviderError as exc:
            raise PersonaGenerationError(
                f"unparseable persona sheet after retry: {exc.detail}"
            ) from exc


class ObjectRegistry:
    """In-memory registry backed by the profile store.

    Many concurrent readers are fine; the resolve path serializes its
    read-match-insert sequence so two simultaneous first meetings of the
    same object cannot create duplicate profiles.
    """

    def __init__(self, store):
        self._store = store
        self._lock = threading.RLock()
        self._profiles: dict[str, ObjectProfile] = {
            p.object_id: p for p in store.load_all()
        }

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def profiles(self) -> list[ObjectProfile]:
        with self._lock:
            return list(self._profiles.values())

    def get(self, object_id: str) -> ObjectProfile | None:
        with self._lock:
            return self._profiles.get(object_id)

    def __len__(self) -> int:
        return len(self._profiles)

    def insert(self, profile: ObjectProfile) -> None:
        with self._lock:
            if profile.object_id in self._profiles:
                raise ValueError(f"duplicate object_id {profile.object_id}")
            self._store.save_profile(profile)
            self._profiles[profile.object_id] = profile

    def update(self, profile: ObjectProfile) -> None:
        with self._lock:
            if profile.object_id not in self._profiles:
                raise ValueError(f"unknown object_id {profile.object_id}")
            self._store.save_profile(profile)
            self._profiles[profile.object_id] = profile


def resolve_identity(
    image: VisionRequest,
    providers: ProviderSet,
    registry: ObjectRegistry,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    clock: Clock | None = None,
    id_factory: IdFactory | None = None,
    archive_image: Callable[[str, bytes, datetime], str] | None = None,
) -> tuple[ObjectProfile, bool]:
    """Resolve an image to a profile, creating one on a miss.

    Returns (profile, was_new). The new-profile path runs description and
    persona generation before anything is persisted, so a provider failure
    leaves no partial profile behind.
    """
    clock = clock or Clock()
    id_factory = id_factory or IdFactory()
    embedding = providers.embedder.embed_image(image)
    with registry.lock:
        result = match_object(embedding, registry.profiles(), threshold, id_factory)
        now = clock.now()
        if result.outcome is MatchOutcome.MATCHED:
            profile = registry.get(result.object_id)
            assert profile is not None
            profile = replace(profile, last_seen_at=now)
            if archive_image is not None:
                profile.image_refs.append(
                    archive_image(profile.object_id, image.image_bytes, now)
                )
            registry.update(profile)
            return profile, False
        description = providers.vision.describe_image(image)
        persona = generate_persona(description, providers)
        profile = ObjectProfile(
            object_id=result.object_id,
            description=description,
            persona=persona,
            embedding=embedding,
            created_at=now,
            last_seen_at=now,
        )
        if archive_image is not None:
            profile.image_refs.append(
                archive_image(profile.object_id, image.image_bytes, now)
            )
        registry.insert(profile)
        return profile, True

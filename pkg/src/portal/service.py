"""Service layer: wires providers, stores, and the ritual engine together and
fans engine events out to participant/operator channels.

Both outward faces (HTTP gateway and CLI) drive this one object, so they
share the identical engine code path.
"""
from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

from . import lights
from .clockid import Clock, FixedStepClock, IdFactory, SequentialIdFactory, isoformat
from .config import DaemonConfig, build_providers
from .identity import ObjectRegistry
from .memory import MemoryStore
from .persistence import (
    ImageArchive,
    MemoryFileStore,
    ProfileStore,
    SessionLogStore,
    StoreLayout,
)
from .ritual import FixtureCameraSource, RitualEngine

log = logging.getLogger(__name__)

CHANNELS = ("participant", "operator")


@dataclass
class Subscription:
    channel: str
    events: "queue.Queue[dict]"
    alive: bool = True


class EventBus:
    """Per-channel, gap-free sequenced event history with live fan-out.

    Slow subscribers (full queue) are disconnected rather than allowed to
    stall the engine.
    """

    def __init__(self, clock: Clock, history_limit: int = 4096, queue_size: int = 512):
        self._clock = clock
        self._lock = threading.Lock()
        self._history: dict[str, list[dict]] = {ch: [] for ch in CHANNELS}
        self._seq: dict[str, int] = {ch: 0 for ch in CHANNELS}
        self._subs: dict[str, list[Subscription]] = {ch: [] for ch in CHANNELS}
        self._history_limit = history_limit
        self._queue_size = queue_size

    def publish(self, kind: str, payload: dict, operator_only: bool = False) -> None:
        ts = isoformat(self._clock.now())
        channels = ("operator",) if operator_only else CHANNELS
        with self._lock:
            for ch in channels:
                self._seq[ch] += 1
                event = {"seq": self._seq[ch], "kind": kind, "payload": payload, "ts": ts}
                history = self._history[ch]
                history.append(event)
                if len(history) > self._history_limit:
                    del history[: len(history) - self._history_limit]
                for sub in list(self._subs[ch]):
                    try:
                        sub.events.put_nowait(event)
                    except queue.Full:
                        sub.alive = False
                        self._subs[ch].remove(sub)

    def subscribe(self, channel: str, from_seq: int = 0) -> Subscription:
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}")
        sub = Subscription(channel=channel, events=queue.Queue(self._queue_size))
        with self._lock:
            for event in self._history[channel]:
                if event["seq"] > from_seq:
                    sub.events.put_nowait(event)
            self._subs[channel].append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            sub.alive = False
            if sub in self._subs[sub.channel]:
                self._subs[sub.channel].remove(sub)


class PortalService:
    def __init__(self, config: DaemonConfig):
        self.config = config
        if config.deterministic:
            self.clock: Clock = FixedStepClock()
            self.ids: IdFactory = SequentialIdFactory()
        else:
            self.clock = Clock()
            self.ids = IdFactory()
        self.providers = build_providers(config)
        layout = StoreLayout.at(config.resolved_data_dir())
        self.layout = layout
        self.profile_store = ProfileStore(layout)
        self.registry = ObjectRegistry(self.profile_store)
        self.memory = MemoryStore(
            MemoryFileStore(layout), self.registry, clock=self.clock, id_factory=self.ids
        )
        self.session_store = SessionLogStore(layout)
        self.image_archive = ImageArchive(layout)
        self.bus = EventBus(self.clock)
        self.camera = FixtureCameraSource()
        pattern_kwargs = dict(
            b_min=config.light_b_min, b_max=config.light_b_max, period_s=config.light_period_s
        )
        self.light = lights.LightController(sink=lights.LogSink())
        # phase patterns honour configured light parameters
        self._breathing = lights.LightPattern(lights.LightMode.BREATHING, **pattern_kwargs)
        self.engine = RitualEngine(
            providers=self.providers,
            registry=self.registry,
            memory=self.memory,
            session_store=self.session_store,
            image_archive=self.image_archive,
            camera=self.camera,
            light=self.light,
            clock=self.clock,
            id_factory=self.ids,
            listener=self.bus.publish,
            threshold=config.match_threshold,
            awaken_word=config.awaken_word,
            goodbye_word=config.goodbye_word,
            breathing_pattern=self._breathing,
        )
        log.info("portal configured: %s", config.redacted())

    # -- gateway-facing operations -------------------------------------------

    def state(self) -> dict:
        return self.engine.state()

    def objects(self) -> list[dict]:
        return [
            {
                "object_id": p.object_id,
                "name": p.persona.name,
                "description": p.description,
                "traits": list(p.persona.traits),
                "created_at": isoformat(p.created_at),
                "last_seen_at": isoformat(p.last_seen_at),
                "image_refs": list(p.image_refs),
            }
            for p in sorted(self.registry.profiles(), key=lambda p: p.created_at)
        ]

    def memories(self, object_id: str, mode: str = "history",
                 query: str = "", limit: int = 20) -> list[dict]:
        if self.registry.get(object_id) is None:
            raise KeyError(object_id)
        if mode == "history":
            records = [(rec, None) for rec in self.memory.retrieve_history(object_id, limit)]
        elif mode == "search":
            if not query:
                raise ValueError("search mode requires a query")
            records = list(
                self.memory.retrieve_relevant(object_id, query, limit, self.providers)
            )
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return [
            {
                "memory_id": rec.memory_id,
                "session_id": rec.session_id,
                "speaker": rec.speaker,
                "text": rec.text,
                "created_at": isoformat(rec.created_at),
                "score": score,
            }
            for rec, score in records
        ]

    def resolve_awaken_image(self, image_ref: str | None) -> bytes | None:
        """Turn an optional image reference into camera-bypass bytes.

        An existing file path is read; otherwise the reference string itself
        becomes a synthetic image payload (mock embedders hash whatever bytes
        they get, so desk tests can awaken with any tag).
        """
        if image_ref is None:
            return None
        path = Path(image_ref)
        if path.exists() and path.is_file():
            return path.read_bytes()
        return image_ref.encode("utf-8")

    def awaken(self, image_ref: str | None = None, image_bytes: bytes | None = None) -> dict:
        if image_bytes is None:
            image_bytes = self.resolve_awaken_image(image_ref)
        return self.engine.awaken(image_bytes=image_bytes)

    def utterance(self, text: str) -> dict:
        return self.engine.handle_utterance(text)

    def goodbye(self) -> dict:
        return self.engine.goodbye()

    def latest_inner(self) -> dict | None:
        session = self.engine.session
        if session is None or not session.inner_entries:
            return None
        return dict(session.inner_entries[-1])

"""Time and identifier sources.

Everything that mints timestamps or ids goes through these so that
mock-provider runs can be made fully deterministic (byte-identical
session logs across repeated runs).
"""
from __future__ import annotations

import threading
import uuid
from datetime import datetime, timedelta, timezone


class Clock:
    """UTC clock guaranteeing strictly increasing timestamps."""

    def __init__(self):
        self._lock = threading.Lock()
        self._last: datetime | None = None

    def _read(self) -> datetime:
        return datetime.now(timezone.utc)

    def now(self) -> datetime:
        with self._lock:
            t = self._read()
            if self._last is not None and t <= self._last:
                t = self._last + timedelta(microseconds=1)
            self._last = t
            return t


class FixedStepClock(Clock):
    """Deterministic clock: starts at a fixed instant, advances a fixed step per read."""

    def __init__(self, start: datetime | None = None, step_s: float = 1.0):
        super().__init__()
        self._next = start or datetime(2025, 1, 1, tzinfo=timezone.utc)
        self._step = timedelta(seconds=step_s)

    def _read(self) -> datetime:
        t = self._next
        self._next = t + self._step
        return t


class IdFactory:
    """Random ids (UUIDv4), the production default."""

    def new_id(self, kind: str) -> str:
        return str(uuid.uuid4())


class SequentialIdFactory(IdFactory):
    """Deterministic counter-based ids for reproducible runs."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counters: dict[str, int] = {}

    def new_id(self, kind: str) -> str:
        with self._lock:
            n = self._counters.get(kind, 0) + 1
            self._counters[kind] = n
            return f"{kind}-{n:04d}"


def isoformat(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat(timespec="microseconds")


def parse_timestamp(raw: str) -> datetime:
    return datetime.fromisoformat(raw)

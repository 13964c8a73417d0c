"""Phase-linked light feedback.

Patterns: steady bright while waiting to receive (Request), a raised-cosine
breathing waveform during Conversation, off when idle. Sinks receive
(timestamp, brightness) samples; the default sink is an in-memory/file log,
real LED hardware is out of scope.
"""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

SAMPLE_RATE_HZ = 30.0


class LightMode(Enum):
    OFF = "off"
    STEADY_BRIGHT = "steady_bright"
    BREATHING = "breathing"


@dataclass(frozen=True)
class LightPattern:
    mode: LightMode
    b_min: float = 0.15
    b_max: float = 0.9
    period_s: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.b_min < self.b_max <= 1.0:
            raise ValueError("need 0 <= b_min < b_max <= 1")
        if self.mode is LightMode.BREATHING and self.period_s <= 0:
            raise ValueError("breathing needs period_s > 0")


OFF = LightPattern(LightMode.OFF)
STEADY_BRIGHT = LightPattern(LightMode.STEADY_BRIGHT)
BREATHING = LightPattern(LightMode.BREATHING)


def brightness_at(pattern: LightPattern, t: float) -> float:
    """Brightness in [0, 1] at t seconds since the pattern started."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if pattern.mode is LightMode.OFF:
        return 0.0
    if pattern.mode is LightMode.STEADY_BRIGHT:
        return pattern.b_max
    phase = (1.0 - math.cos(2.0 * math.pi * t / pattern.period_s)) / 2.0
    return pattern.b_min + (pattern.b_max - pattern.b_min) * phase


class LightSink(Protocol):
    def handle(self, timestamp: float, brightness: float) -> None: ...


class LogSink:
    """Keeps samples in memory, optionally mirroring to a log file."""

    def __init__(self, path: str | Path | None = None):
        self.samples: list[tuple[float, float]] = []
        self._path = Path(path) if path else None

    def handle(self, timestamp: float, brightness: float) -> None:
        self.samples.append((timestamp, brightness))
        if self._path:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(f"{timestamp:.3f}\t{brightness:.4f}\n")


class ConsoleSink:
    """Renders brightness as a bar in the terminal, for desk sessions."""

    def __init__(self, width: int = 40, out: Callable[[str], None] = print):
        self.width = width
        self.out = out

    def handle(self, timestamp: float, brightness: float) -> None:
        filled = round(brightness * self.width)
        self.out("[" + "#" * filled + " " * (self.width - filled) + "]")


class LightController:
    """Holds the current pattern and a command log of pattern changes.

    An optional sampler thread feeds the sink at SAMPLE_RATE_HZ; the ritual
    engine only sets patterns, it never blocks on light output.
    """

    def __init__(self, sink: LightSink | None = None,
                 time_fn: Callable[[], float] = time.monotonic):
        self.sink = sink
        self._time = time_fn
        self._lock = threading.Lock()
        self._pattern = OFF
        self._pattern_started = self._time()
        self.command_log: list[tuple[float, LightPattern]] = []
        self._sampler: threading.Thread | None = None
        self._stop = threading.Event()

    @property
    def pattern(self) -> LightPattern:
        with self._lock:
            return self._pattern

    def set_pattern(self, pattern: LightPattern) -> None:
        with self._lock:
            self._pattern = pattern
            self._pattern_started = self._time()
            self.command_log.append((self._pattern_started, pattern))

    def current_brightness(self) -> float:
        with self._lock:
            return brightness_at(self._pattern, self._time() - self._pattern_started)

    def sample_once(self) -> float:
        b = self.current_brightness()
        if self.sink is not None:
            self.sink.handle(self._time(), b)
        return b

    def start_sampler(self, rate_hz: float = SAMPLE_RATE_HZ) -> None:
        if self._sampler is not None:
            return
        interval = 1.0 / rate_hz
        self._stop.clear()

        def loop():
            while not self._stop.wait(interval):
                self.sample_once()

        self._sampler = threading.Thread(target=loop, daemon=True, name="light-sampler")
        self._sampler.start()

    def stop_sampler(self) -> None:
        self._stop.set()
        if self._sampler is not None:
            self._sampler.join(timeout=1.0)
            self._sampler = None

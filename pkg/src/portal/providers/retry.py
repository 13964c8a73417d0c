"""Retry policy for provider calls.

Retryable failures (timeout, rate limit, unavailable) are retried with
exponential backoff; everything else surfaces immediately.
"""
from __future__ import annotations

import time
from typing import Callable, Sequence, TypeVar

from .base import ProviderError

T = TypeVar("T")

DEFAULT_BACKOFF_S: tuple[float, ...] = (0.5, 2.0, 8.0)


def call_with_retries(
    fn: Callable[[], T],
    max_retries: int = 3,
    backoff_s: Sequence[float] = DEFAULT_BACKOFF_S,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Invoke fn, retrying retryable ProviderErrors up to max_retries times."""
    attempt = 0
    while True:
        try:
            return fn()
        except ProviderError as err:
            if not err.retryable or attempt >= max_retries:
                raise
            delay = backoff_s[min(attempt, len(backoff_s) - 1)]
            sleep(delay)
            attempt += 1

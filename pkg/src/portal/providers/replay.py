"""Record/replay wrapper for chat calls.

Fixtures live in a directory keyed by a hash of the request; record mode
passes through to the wrapped provider and saves the response, replay mode
answers from disk only. Lets integration tests exercise a recorded live
exchange verbatim, offline.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .base import ChatProvider, ChatRequest, ErrorKind, ProviderError


def request_hash(req: ChatRequest) -> str:
    payload = json.dumps(
        {
            "system": req.system_prompt,
            "messages": [[m.role, m.text] for m in req.messages],
            "schema": req.response_schema_tag.value,
        },
        sort_keys=True,
        ensure_ascii=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:32]


class RecordReplayChatProvider:
    def __init__(self, fixtures_dir: str | Path, inner: ChatProvider | None = None,
                 mode: str = "replay"):
        if mode not in ("record", "replay"):
            raise ValueError(f"invalid mode {mode!r}")
        if mode == "record" and inner is None:
            raise ValueError("record mode needs an inner provider")
        self.fixtures_dir = Path(fixtures_dir)
        self.inner = inner
        self.mode = mode

    def _path(self, req: ChatRequest) -> Path:
        return self.fixtures_dir / f"{request_hash(req)}.txt"

    def chat(self, req: ChatRequest) -> str:
        path = self._path(req)
        if self.mode == "replay":
            if not path.exists():
                raise ProviderError(
                    ErrorKind.UNAVAILABLE, f"no replay fixture {path.name}"
                )
            return path.read_text(encoding="utf-8")
        assert self.inner is not None
        response = self.inner.chat(req)
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(response, encoding="utf-8")
        return response

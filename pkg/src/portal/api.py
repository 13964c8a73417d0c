"""HTTP gateway: REST endpoints plus a server-sent-events stream per channel.

Endpoint schema is documented in docs/API.md. All mutating requests funnel
into the single ritual engine; the event stream fans out through the bus.
"""
from __future__ import annotations

import base64
import json
import queue
from typing import Iterator, Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from .config import DaemonConfig
from .service import CHANNELS, PortalService


class UtteranceIn(BaseModel):
    text: str = Field(min_length=1)


class AwakenIn(BaseModel):
    image_ref: Optional[str] = None
    image_b64: Optional[str] = None


class ActionOut(BaseModel):
    status: str
    phase: str
    session_id: Optional[str] = None
    object_id: Optional[str] = None
    name: Optional[str] = None
    was_new: Optional[bool] = None
    spoke: Optional[bool] = None
    response: Optional[str] = None
    reason: Optional[str] = None
    inner: Optional[dict] = None


class ObjectOut(BaseModel):
    object_id: str
    name: str
    description: str
    traits: list[str]
    created_at: str
    last_seen_at: str
    image_refs: list[str]


class MemoryOut(BaseModel):
    memory_id: str
    session_id: str
    speaker: str
    text: str
    created_at: str
    score: Optional[float] = None


def create_app(config: DaemonConfig, service: PortalService | None = None) -> FastAPI:
    app = FastAPI(title="portal", version="0.1.0")
    svc = service or PortalService(config)
    app.state.service = svc

    def _bearer(request: Request) -> str:
        auth = request.headers.get("authorization", "")
        if auth.lower().startswith("bearer "):
            return auth[7:]
        return request.query_params.get("token", "")

    def _check_channel(request: Request, channel: str) -> None:
        expected = (
            config.operator_token if channel == "operator" else config.participant_token
        )
        if expected and _bearer(request) != expected:
            raise HTTPException(status_code=401, detail=f"invalid {channel} token")

    def operator_guard(request: Request) -> None:
        _check_channel(request, "operator")

    @app.get("/state")
    def get_state() -> dict:
        return svc.state()

    @app.get("/objects", response_model=list[ObjectOut])
    def get_objects():
        return svc.objects()

    @app.get(
        "/objects/{object_id}/memories",
        response_model=list[MemoryOut],
        dependencies=[Depends(operator_guard)],
    )
    def get_memories(
        object_id: str,
        mode: str = Query("history", pattern="^(history|search)$"),
        q: str = "",
        limit: int = Query(20, ge=1, le=500),
    ):
        try:
            return svc.memories(object_id, mode=mode, query=q, limit=limit)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown object {object_id}")
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/session/awaken", response_model=ActionOut, response_model_exclude_none=True)
    def post_awaken(body: AwakenIn | None = None):
        body = body or AwakenIn()
        image_bytes = None
        if body.image_b64:
            try:
                image_bytes = base64.b64decode(body.image_b64)
            except ValueError:
                raise HTTPException(status_code=400, detail="invalid image_b64")
        return svc.awaken(image_ref=body.image_ref, image_bytes=image_bytes)

    @app.post("/session/utterance", response_model=ActionOut, response_model_exclude_none=True)
    def post_utterance(body: UtteranceIn, request: Request, include_inner: bool = False):
        result = svc.utterance(body.text)
        if include_inner:
            _check_channel(request, "operator")
            inner = svc.latest_inner()
            if inner is not None and result.get("status") in ("turn_completed", "turn_failed"):
                result = dict(result, inner=inner)
        return result

    @app.post("/session/goodbye", response_model=ActionOut, response_model_exclude_none=True)
    def post_goodbye():
        return svc.goodbye()

    @app.get("/events")
    def get_events(
        request: Request,
        channel: str = Query("participant"),
        from_seq: int = Query(0, ge=0),
        max_events: int = Query(0, ge=0),  # 0 = unbounded
        idle_timeout_s: float = Query(0.0, ge=0.0),  # 0 = wait forever
    ):
        if channel not in CHANNELS:
            raise HTTPException(status_code=400, detail=f"unknown channel {channel!r}")
        _check_channel(request, channel)
        last_id = request.headers.get("last-event-id")
        if last_id and last_id.isdigit():
            from_seq = max(from_seq, int(last_id))
        sub = svc.bus.subscribe(channel, from_seq=from_seq)

        def stream() -> Iterator[str]:
            sent = 0
            try:
                while True:
                    try:
                        event = sub.events.get(
                            timeout=idle_timeout_s if idle_timeout_s > 0 else 15.0
                        )
                    except queue.Empty:
                        if idle_timeout_s > 0:
                            return
                        yield ": keepalive\n\n"
                        continue
                    data = json.dumps(
                        {"kind": event["kind"], "payload": event["payload"], "ts": event["ts"]},
                        ensure_ascii=True,
                    )
                    yield f"id: {event['seq']}\nevent: {event['kind']}\ndata: {data}\n\n"
                    sent += 1
                    if max_events and sent >= max_events:
                        return
            finally:
                svc.bus.unsubscribe(sub)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app

"""HTTP-backed provider implementations.

Each capability talks JSON over HTTPS with bearer-token auth; tokens come
from environment variables. These target capability-equivalent endpoints
rather than any single vendor's wire format.
"""
from __future__ import annotations

import base64
import os

import httpx

from .base import (
    ChatRequest,
    Embedding,
    ErrorKind,
    ProviderError,
    SpeechRequest,
    SpeechResult,
    VisionRequest,
)
from .retry import call_with_retries

DEFAULT_TIMEOUT_S = 30.0

ENV_VISION_KEY = "PORTAL_VISION_KEY"
ENV_CHAT_KEY = "PORTAL_CHAT_KEY"
ENV_EMBED_KEY = "PORTAL_EMBED_KEY"
ENV_TTS_KEY = "PORTAL_TTS_KEY"
ENV_STT_KEY = "PORTAL_STT_KEY"


def _token(env_var: str) -> str:
    token = os.environ.get(env_var, "")
    if not token:
        raise ProviderError(ErrorKind.AUTH_FAILURE, f"{env_var} is not set")
    return token


class _HttpCapability:
    """Shared plumbing: auth, timeout, retries, error mapping."""

    def __init__(self, base_url: str, token_env: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.base_url = base_url.rstrip("/")
        self.token_env = token_env
        self.timeout_s = timeout_s
        self._client = httpx.Client(timeout=timeout_s)

    def _post(self, path: str, payload: dict) -> dict:
        def attempt() -> dict:
            headers = {"Authorization": f"Bearer {_token(self.token_env)}"}
            try:
                resp = self._client.post(
                    f"{self.base_url}{path}", json=payload, headers=headers
                )
            except httpx.TimeoutException as exc:
                raise ProviderError(ErrorKind.TIMEOUT, str(exc)) from exc
            except httpx.HTTPError as exc:
                raise ProviderError(ErrorKind.UNAVAILABLE, str(exc)) from exc
            if resp.status_code in (401, 403):
                raise ProviderError(ErrorKind.AUTH_FAILURE, resp.text)
            if resp.status_code == 429:
                raise ProviderError(ErrorKind.RATE_LIMITED, resp.text)
            if resp.status_code >= 500:
                raise ProviderError(ErrorKind.UNAVAILABLE, resp.text)
            if resp.status_code >= 400:
                raise ProviderError(ErrorKind.MALFORMED_RESPONSE, resp.text)
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderError(ErrorKind.MALFORMED_RESPONSE, str(exc)) from exc

        return call_with_retries(attempt)


class HttpVisionProvider(_HttpCapability):
    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        super().__init__(base_url, ENV_VISION_KEY, timeout_s)

    def describe_image(self, req: VisionRequest) -> str:
        body = self._post(
            "/v1/describe",
            {
                "image_b64": base64.b64encode(req.image_bytes).decode("ascii"),
                "mime_type": req.mime_type,
            },
        )
        description = body.get("description", "")
        if not description:
            raise ProviderError(ErrorKind.MALFORMED_RESPONSE, "empty description")
        return description


class HttpEmbeddingProvider(_HttpCapability):
    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        super().__init__(base_url, ENV_EMBED_KEY, timeout_s)

    def _parse(self, body: dict) -> Embedding:
        values = body.get("embedding")
        if not isinstance(values, list) or not values:
            raise ProviderError(ErrorKind.MALFORMED_RESPONSE, "missing embedding")
        return Embedding(tuple(float(v) for v in values)).normalized()

    def embed_image(self, req: VisionRequest) -> Embedding:
        return self._parse(
            self._post(
                "/v1/embed/image",
                {
                    "image_b64": base64.b64encode(req.image_bytes).decode("ascii"),
                    "mime_type": req.mime_type,
                },
            )
        )

    def embed_text(self, text: str) -> Embedding:
        return self._parse(self._post("/v1/embed/text", {"text": text}))


class HttpChatProvider(_HttpCapability):
    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        super().__init__(base_url, ENV_CHAT_KEY, timeout_s)

    def chat(self, req: ChatRequest) -> str:
        body = self._post(
            "/v1/chat",
            {
                "system": req.system_prompt,
                "messages": [{"role": m.role, "text": m.text} for m in req.messages],
            },
        )
        text = body.get("text", "")
        if not text:
            raise ProviderError(ErrorKind.MALFORMED_RESPONSE, "service returned empty text")
        return text


class HttpSpeechProvider(_HttpCapability):
    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        super().__init__(base_url, ENV_TTS_KEY, timeout_s)

    def synthesize_speech(self, req: SpeechRequest) -> SpeechResult:
        body = self._post(
            "/v1/speech",
            {"text": req.text, "voice_id": req.voice_id, "engine": req.engine_tag},
        )
        audio_b64 = body.get("audio_b64", "")
        if not audio_b64:
            raise ProviderError(ErrorKind.MALFORMED_RESPONSE, "empty audio")
        try:
            audio = base64.b64decode(audio_b64)
        except ValueError as exc:
            raise ProviderError(ErrorKind.MALFORMED_RESPONSE, str(exc)) from exc
        return SpeechResult(audio=audio, duration_ms=int(body.get("duration_ms", 0)))


class HttpTranscriptionProvider(_HttpCapability):
    def __init__(self, base_url: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        super().__init__(base_url, ENV_STT_KEY, timeout_s)

    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise ValueError("audio must be non-empty")
        body = self._post(
            "/v1/transcribe",
            {"audio_b64": base64.b64encode(audio).decode("ascii")},
        )
        return body.get("text", "")

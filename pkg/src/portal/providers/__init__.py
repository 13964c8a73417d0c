from .base import (
    ALLOWED_MIME_TYPES,
    DEFAULT_EMBEDDING_DIM,
    ChatMessage,
    ChatProvider,
    ChatRequest,
    Embedding,
    EmbeddingProvider,
    ErrorKind,
    ProviderError,
    ProviderSet,
    SchemaTag,
    SpeechProvider,
    SpeechRequest,
    SpeechResult,
    TranscriptionProvider,
    VisionProvider,
    VisionRequest,
    content_tag,
    cosine_similarity,
)
from .mock import (
    DeterministicChatProvider,
    MockEmbeddingProvider,
    MockSpeechProvider,
    MockTranscriptionProvider,
    MockVisionProvider,
    ScriptedChatProvider,
    SILENCE_CUE,
)
from .retry import DEFAULT_BACKOFF_S, call_with_retries
from .replay import RecordReplayChatProvider, request_hash


def mock_provider_set() -> ProviderSet:
    """All-mock provider set with a schema-aware deterministic chat."""
    return ProviderSet(
        vision=MockVisionProvider(),
        embedder=MockEmbeddingProvider(),
        chat=DeterministicChatProvider(),
        speech=MockSpeechProvider(),
        transcriber=MockTranscriptionProvider(),
    )

import random

import pytest

from portal.clockid import Clock, SequentialIdFactory
from portal.identity import ObjectRegistry
from portal.memory import SPEAKER_HUMAN, SPEAKER_OBJECT, MemoryStore
from portal.persistence import MemoryFileStore, ProfileStore, StoreLayout
from portal.providers import cosine_similarity, ScriptedChatProvider

from test_identity import make_profile, mock_providers


@pytest.fixture
def env(tmp_path):
    layout = StoreLayout.at(tmp_path)
    registry = ObjectRegistry(ProfileStore(layout))
    registry.insert(make_profile("A", [1.0, 0.0]))
    registry.insert(make_profile("B", [0.0, 1.0]))
    store = MemoryStore(
        MemoryFileStore(layout), registry, clock=Clock(), id_factory=SequentialIdFactory()
    )
    return store, mock_providers()


class TestStore:
    def test_timestamps_monotone(self, env):
        store, providers = env
        m1 = store.store_memory("A", "s1", SPEAKER_HUMAN, "hello", providers)
        m2 = store.store_memory("A", "s1", SPEAKER_HUMAN, "world", providers)
        assert m2.created_at > m1.created_at

    def test_unknown_object_rejected(self, env):
        store, providers = env
        with pytest.raises(ValueError):
            store.store_memory("nope", "s1", SPEAKER_HUMAN, "hi", providers)

    def test_embedding_matches_provider(self, env):
        store, providers = env
        rec = store.store_memory("A", "s1", SPEAKER_HUMAN, "hello", providers)
        assert rec.embedding.values == providers.embedder.embed_text("hello").values

    def test_empty_text_rejected(self, env):
        store, providers = env
        with pytest.raises(ValueError):
            store.store_memory("A", "s1", SPEAKER_HUMAN, "", providers)


class TestHistory:
    def test_full_history_ascending(self, env):
        store, providers = env
        texts = ["m1", "m2", "m3"]
        for t in texts:
            store.store_memory("A", "s1", SPEAKER_HUMAN, t, providers)
        out = store.retrieve_history("A", 10)
        assert [r.text for r in out] == texts

    def test_recency_window_stays_ascending(self, env):
        store, providers = env
        for t in ["m1", "m2", "m3"]:
            store.store_memory("A", "s1", SPEAKER_HUMAN, t, providers)
        out = store.retrieve_history("A", 2)
        assert [r.text for r in out] == ["m2", "m3"]

    def test_empty_store(self, env):
        store, _ = env
        assert store.retrieve_history("A", 5) == []

    def test_limit_is_suffix_of_full(self, env):
        store, providers = env
        for i in range(10):
            store.store_memory("A", "s1", SPEAKER_HUMAN, f"t{i}", providers)
        full = store.retrieve_history("A", 1000)
        for k in range(1, 11):
            assert store.retrieve_history("A", k) == full[-k:]

    def test_round_trip_exact(self, env):
        store, providers = env
        rec = store.store_memory("A", "s1", SPEAKER_OBJECT, "exact words", providers)
        (loaded,) = store.retrieve_history("A", 1)
        assert loaded.text == rec.text
        assert loaded.created_at == rec.created_at
        assert loaded.memory_id == rec.memory_id
        assert loaded.speaker == rec.speaker
        # embeddings persist as float32
        for a, b in zip(loaded.embedding.values, rec.embedding.values):
            assert abs(a - b) <= 1e-6


class TestSearch:
    def test_self_similarity_ranks_first(self, env):
        store, providers = env
        store.store_memory("A", "s1", SPEAKER_HUMAN, "the rain on the window", providers)
        store.store_memory("A", "s1", SPEAKER_HUMAN, "a trip to the sea", providers)
        out = store.retrieve_relevant("A", "the rain on the window", 5, providers)
        assert out[0][0].text == "the rain on the window"
        assert abs(out[0][1] - 1.0) <= 1e-6

    def test_limit_saturation(self, env):
        store, providers = env
        for t in ["x", "y"]:
            store.store_memory("A", "s1", SPEAKER_HUMAN, t, providers)
        assert len(store.retrieve_relevant("A", "anything", 50, providers)) == 2

    def test_ranking_matches_brute_force(self, env):
        store, providers = env
        rng = random.Random(7)
        for i in range(50):
            store.store_memory("A", "s1", SPEAKER_HUMAN, f"memory {rng.random()} {i}", providers)
        query = "memory of something specific"
        got = store.retrieve_relevant("A", query, 50, providers)
        q = providers.embedder.embed_text(query)
        expected = sorted(
            [(r, cosine_similarity(q, r.embedding)) for r in store.retrieve_history("A", 1000)],
            key=lambda pair: (pair[1], pair[0].created_at),
            reverse=True,
        )
        assert [r.memory_id for r, _ in got] == [r.memory_id for r, _ in expected]

    def test_namespacing(self, env):
        store, providers = env
        store.store_memory("A", "s1", SPEAKER_HUMAN, "only for A", providers)
        store.store_memory("B", "s1", SPEAKER_HUMAN, "only for B", providers)
        for rec in store.retrieve_history("A", 100):
            assert rec.object_id == "A"
        for rec, _ in store.retrieve_relevant("B", "only", 100, providers):
            assert rec.object_id == "B"


class TestSummary:
    def test_summary_prefix_and_storage(self, env):
        store, providers = env
        store.store_memory("A", "s1", SPEAKER_HUMAN, "tell me about rain", providers)
        providers.chat = ScriptedChatProvider(["we spoke of rain"])
        summary = store.summarize_session("A", "s1", providers)
        assert summary.text == "[summary] we spoke of rain"
        assert summary.speaker == SPEAKER_OBJECT

    def test_empty_session_rejected_without_call(self, env):
        store, providers = env
        chat = ScriptedChatProvider(["should never be used"])
        providers.chat = chat
        with pytest.raises(ValueError):
            store.summarize_session("A", "nosuch", providers)
        assert chat.call_count == 0

    def test_summary_visible_in_history(self, env):
        store, providers = env
        store.store_memory("A", "s1", SPEAKER_HUMAN, "hello", providers)
        providers.chat = ScriptedChatProvider(["short chat"])
        store.summarize_session("A", "s1", providers)
        texts = [r.text for r in store.retrieve_history("A", 10)]
        assert "[summary] short chat" in texts

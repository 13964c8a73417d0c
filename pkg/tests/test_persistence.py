import json
import random
from datetime import datetime, timezone

import pytest

from portal.clockid import Clock
from portal.identity import ObjectProfile
from portal.persistence import (
    ImageArchive,
    ProfileStore,
    SessionLogStore,
    StorageError,
    StoreLayout,
    decode_embedding,
    encode_embedding,
    profile_from_record,
    profile_to_record,
)
from portal.providers import Embedding

from test_identity import make_persona

T0 = datetime(2025, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def full_profile(object_id="obj-x", dim=512):
    rng = random.Random(42)
    emb = Embedding(tuple(rng.gauss(0, 1) for _ in range(dim))).normalized()
    # round-trip through float32 so stored and in-memory values agree exactly
    emb = decode_embedding(encode_embedding(emb), dim)
    return ObjectProfile(
        object_id=object_id,
        description="a small plush fox with a red scarf",
        persona=make_persona("Fen"),
        embedding=emb,
        created_at=T0,
        last_seen_at=T0,
        image_refs=["obj-x/20250301T120000.000000.bin"],
    )


class TestProfileStore:
    def test_save_load_round_trip(self, tmp_path):
        store = ProfileStore(StoreLayout.at(tmp_path))
        profile = full_profile()
        store.save_profile(profile)
        (loaded,) = store.load_all()
        assert loaded == profile
        assert len(loaded.embedding.values) == 512

    def test_two_profiles_both_returned(self, tmp_path):
        store = ProfileStore(StoreLayout.at(tmp_path))
        store.save_profile(full_profile("a", dim=8))
        store.save_profile(full_profile("b", dim=8))
        assert {p.object_id for p in store.load_all()} == {"a", "b"}

    def test_duplicate_save_is_upsert(self, tmp_path):
        store = ProfileStore(StoreLayout.at(tmp_path))
        p = full_profile("a", dim=8)
        store.save_profile(p)
        updated = full_profile("a", dim=8)
        updated.description = "now with a new scarf"
        store.save_profile(updated)
        (loaded,) = store.load_all()
        assert loaded.description == "now with a new scarf"

    def test_empty_dir_empty_registry(self, tmp_path):
        assert ProfileStore(StoreLayout.at(tmp_path)).load_all() == []

    def test_corrupt_record_skipped_with_warning(self, tmp_path, caplog):
        layout = StoreLayout.at(tmp_path)
        store = ProfileStore(layout)
        store.save_profile(full_profile("a", dim=8))
        store.save_profile(full_profile("b", dim=8))
        store.save_profile(full_profile("c", dim=8))
        lines = layout.registry_file.read_text().splitlines()
        lines[1] = '{"broken": '
        layout.registry_file.write_text("\n".join(lines) + "\n")
        with caplog.at_level("WARNING"):
            profiles = store.load_all()
        assert len(profiles) == 2
        assert any("corrupt" in rec.message for rec in caplog.records)

    def test_serialize_parse_serialize_fixed_point(self, tmp_path):
        profile = full_profile(dim=16)
        rec = profile_to_record(profile)
        again = profile_to_record(profile_from_record(rec))
        assert json.dumps(rec, sort_keys=True) == json.dumps(again, sort_keys=True)


class TestCrashSafety:
    @pytest.mark.parametrize("point", ProfileStore.WRITE_POINTS)
    def test_interrupted_write_leaves_registry_loadable(self, tmp_path, point):
        layout = StoreLayout.at(tmp_path)
        ProfileStore(layout).save_profile(full_profile("a", dim=8))

        class Crash(RuntimeError):
            pass

        def fault(p):
            if p == point:
                raise Crash(p)

        updated = full_profile("a", dim=8)
        updated.description = "new version"
        store = ProfileStore(layout, fault_hook=fault)
        with pytest.raises(Crash):
            store.save_profile(updated)

        survivors = ProfileStore(layout).load_all()
        assert len(survivors) == 1
        assert survivors[0].description in ("a small plush fox with a red scarf", "new version")


class TestImageArchive:
    def test_refs_round_trip_and_chronological(self, tmp_path):
        archive = ImageArchive(StoreLayout.at(tmp_path))
        clock = Clock()
        r1 = archive.archive("obj-a", b"image-one", clock.now())
        r2 = archive.archive("obj-a", b"image-two", clock.now())
        assert r1 < r2  # timestamped names sort chronologically
        assert archive.read(r1) == b"image-one"
        assert archive.read(r2) == b"image-two"

    def test_identical_bytes_two_refs(self, tmp_path):
        archive = ImageArchive(StoreLayout.at(tmp_path))
        t = T0
        r1 = archive.archive("obj-a", b"same", t)
        r2 = archive.archive("obj-a", b"same", t)
        assert r1 != r2


class TestSessionLogStore:
    def test_write_once_never_overwritten(self, tmp_path):
        store = SessionLogStore(StoreLayout.at(tmp_path))
        store.write("ses-1", {"session_id": "ses-1"})
        with pytest.raises(StorageError):
            store.write("ses-1", {"session_id": "ses-1", "tampered": True})
        assert store.read("ses-1") == {"session_id": "ses-1"}

    def test_list_ids_sorted(self, tmp_path):
        store = SessionLogStore(StoreLayout.at(tmp_path))
        store.write("ses-2", {})
        store.write("ses-1", {})
        assert store.list_ids() == ["ses-1", "ses-2"]


class TestEmbeddingCodec:
    def test_base64_float32_round_trip(self):
        emb = Embedding((0.5, -0.25, 0.125, 1.0))
        assert decode_embedding(encode_embedding(emb), 4).values == emb.values

import json

import pytest
from fastapi.testclient import TestClient

from portal.api import create_app
from portal.cli import main as cli_main
from portal.config import DaemonConfig, mock_all_config
from portal.service import PortalService


@pytest.fixture
def client(tmp_path):
    cfg = mock_all_config(data_dir=str(tmp_path / "data"))
    return TestClient(create_app(cfg))


def run_session(client, utterances=("hello",)):
    client.post("/session/awaken", json={"image_ref": "fox.png"})
    for text in utterances:
        client.post("/session/utterance", json={"text": text})
    client.post("/session/goodbye")


def sse_events(client, channel, **params):
    query = {"channel": channel, "idle_timeout_s": 0.2, **params}
    events = []
    with client.stream("GET", "/events", params=query) as resp:
        assert resp.headers["content-type"].startswith("text/event-stream")
        current = {}
        for line in resp.iter_lines():
            if line.startswith("id: "):
                current["seq"] = int(line[4:])
            elif line.startswith("event: "):
                current["kind"] = line[7:]
            elif line.startswith("data: "):
                current["data"] = json.loads(line[6:])
            elif line == "" and current:
                events.append(current)
                current = {}
    return events


class TestEndpoints:
    def test_state_walks_to_conversation(self, client):
        assert client.get("/state").json()["phase"] == "idle"
        out = client.post("/session/awaken", json={"image_ref": "fox.png"}).json()
        assert out["status"] == "awakened"
        assert client.get("/state").json()["phase"] == "conversation"

    def test_goodbye_utterance_closes_session(self, client):
        client.post("/session/awaken", json={"image_ref": "fox.png"})
        out = client.post("/session/utterance", json={"text": "goodbye"}).json()
        assert out["status"] == "closed"
        assert client.get("/state").json()["phase"] == "idle"

    def test_two_first_meetings_two_profiles(self, client):
        run_session(client)
        client.post("/session/awaken", json={"image_ref": "cup.png"})
        client.post("/session/goodbye")
        objects = client.get("/objects").json()
        assert len(objects) == 2

    def test_memories_history_and_search(self, client):
        run_session(client, utterances=("tell me about rain", "and the sea"))
        (obj,) = client.get("/objects").json()
        hist = client.get(f"/objects/{obj['object_id']}/memories").json()
        assert [m["text"] for m in hist][:1] == ["tell me about rain"]
        search = client.get(
            f"/objects/{obj['object_id']}/memories",
            params={"mode": "search", "q": "tell me about rain", "limit": 3},
        ).json()
        assert search[0]["text"] == "tell me about rain"
        assert search[0]["score"] == pytest.approx(1.0, abs=1e-6)

    def test_search_requires_query(self, client):
        run_session(client)
        (obj,) = client.get("/objects").json()
        resp = client.get(
            f"/objects/{obj['object_id']}/memories", params={"mode": "search"}
        )
        assert resp.status_code == 400

    def test_unknown_object_404(self, client):
        assert client.get("/objects/nope/memories").status_code == 404

    def test_malformed_utterance_422(self, client):
        assert client.post("/session/utterance", json={"text": ""}).status_code == 422

    def test_unknown_channel_400(self, client):
        assert client.get("/events", params={"channel": "spy"}).status_code == 400


class TestEventStream:
    def test_phase_walk_observed_in_order(self, client):
        run_session(client)
        events = sse_events(client, "participant")
        phases = [e["data"]["payload"]["phase"] for e in events if e["kind"] == "PhaseChanged"]
        assert phases == ["request", "conversation", "transformation", "idle"]

    def test_seq_gap_free_per_connection(self, client):
        run_session(client)
        for channel in ("participant", "operator"):
            events = sse_events(client, channel)
            seqs = [e["seq"] for e in events]
            assert seqs == list(range(1, len(seqs) + 1))

    def test_participant_never_sees_inner_thoughts(self, client):
        run_session(client, utterances=("hello", "how are you"))
        participant = sse_events(client, "participant")
        operator = sse_events(client, "operator")
        assert not [e for e in participant if e["kind"] == "InnerThoughts"]
        inner = [e for e in operator if e["kind"] == "InnerThoughts"]
        assert len(inner) == 2

    def test_resume_from_seq(self, client):
        run_session(client)
        all_events = sse_events(client, "participant")
        cut = all_events[2]["seq"]
        resumed = sse_events(client, "participant", from_seq=cut)
        assert [e["seq"] for e in resumed] == [e["seq"] for e in all_events if e["seq"] > cut]

    def test_transcript_appends_observed_exactly_once(self, client):
        run_session(client, utterances=("one", "two"))
        events = sse_events(client, "participant")
        texts = [
            e["data"]["payload"]["text"]
            for e in events
            if e["kind"] == "TranscriptAppended" and e["data"]["payload"]["speaker"] == "human"
        ]
        assert texts == ["one", "two"]


class TestChannelAuth:
    def test_operator_token_enforced(self, tmp_path):
        cfg = mock_all_config(
            data_dir=str(tmp_path / "data"), operator_token="secret-op"
        )
        client = TestClient(create_app(cfg))
        run_session(client)
        assert client.get("/events", params={"channel": "operator"}).status_code == 401
        ok = client.get(
            "/events",
            params={"channel": "operator", "idle_timeout_s": 0.1, "token": "secret-op"},
        )
        assert ok.status_code == 200
        (obj,) = client.get("/objects").json()
        assert client.get(f"/objects/{obj['object_id']}/memories").status_code == 401
        assert (
            client.get(
                f"/objects/{obj['object_id']}/memories",
                headers={"Authorization": "Bearer secret-op"},
            ).status_code
            == 200
        )


REPL_SCRIPT = "awaken fox.png\nsay hello\nsay how are you\ngoodbye\nquit\n"


class TestCli:
    def test_repl_script_deterministic(self, tmp_path):
        from click.testing import CliRunner

        runner = CliRunner()
        outputs = []
        for i in range(2):
            result = runner.invoke(
                cli_main,
                ["repl", "--mock-all", "--data-dir", str(tmp_path / f"run{i}")],
                input=REPL_SCRIPT,
            )
            assert result.exit_code == 0, result.output
            outputs.append(result.output)
        assert outputs[0] == outputs[1]
        assert "bound to" in outputs[0]

    def test_say_before_awaken_errors(self, tmp_path):
        from click.testing import CliRunner

        result = CliRunner().invoke(
            cli_main,
            ["repl", "--mock-all", "--data-dir", str(tmp_path / "d")],
            input="say hello\nquit\n",
        )
        assert "no active session" in result.output

    def test_objects_on_fresh_dir_none(self, tmp_path):
        from click.testing import CliRunner

        result = CliRunner().invoke(
            cli_main,
            ["repl", "--mock-all", "--data-dir", str(tmp_path / "d")],
            input="objects\nquit\n",
        )
        assert "(none)" in result.output

    def test_show_inner_prints_covert_tier(self, tmp_path):
        from click.testing import CliRunner

        result = CliRunner().invoke(
            cli_main,
            ["repl", "--mock-all", "--show-inner", "--data-dir", str(tmp_path / "d")],
            input="awaken fox.png\nsay hello\ngoodbye\nquit\n",
        )
        assert "(inner " in result.output

    def test_repl_and_http_share_engine_path(self, tmp_path):
        """The same script through REPL and raw HTTP yields identical session logs."""
        from click.testing import CliRunner

        repl_dir = tmp_path / "repl"
        http_dir = tmp_path / "http"
        CliRunner().invoke(
            cli_main,
            ["repl", "--mock-all", "--data-dir", str(repl_dir)],
            input=REPL_SCRIPT,
        )
        client = TestClient(create_app(mock_all_config(data_dir=str(http_dir))))
        client.post("/session/awaken", json={"image_ref": "fox.png"})
        client.post("/session/utterance", json={"text": "hello"})
        client.post("/session/utterance", json={"text": "how are you"})
        client.post("/session/goodbye")

        repl_logs = sorted((repl_dir / "sessions").glob("*.json"))
        http_logs = sorted((http_dir / "sessions").glob("*.json"))
        assert len(repl_logs) == len(http_logs) == 1
        assert repl_logs[0].read_bytes() == http_logs[0].read_bytes()

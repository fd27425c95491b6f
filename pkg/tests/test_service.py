import pytest
from fastapi.testclient import TestClient

from intentlayer.corpus import load_corpus
from intentlayer.review import ReviewSession, read_log
from intentlayer.service import ServiceConfig, create_app

from .test_review import review_corpus


@pytest.fixture()
def client(tmp_path):
    session = ReviewSession(review_corpus())
    config = ServiceConfig(
        log_path=str(tmp_path / "decisions.jsonl"),
        export_path=str(tmp_path / "final.jsonl"),
    )
    app = create_app(session, config)
    with TestClient(app) as c:
        c.config = config
        yield c


class TestReads:
    def test_session_summary(self, client):
        r = client.get("/api/session")
        assert r.status_code == 200
        body = r.json()
        assert body["corpus_name"] == "review-fixture"
        assert body["progress"]["total_pseudo"] == 4
        assert body["progress"]["remaining"] == 5

    def test_groups_listing(self, client):
        r = client.get("/api/groups")
        assert r.status_code == 200
        groups = r.json()
        assert [g["label"] for g in groups] == ["booking", "booking#thanking"]
        assert groups[0]["size"] == 3

    def test_group_paging(self, client):
        gid = client.get("/api/groups").json()[0]["id"]
        page1 = client.get(f"/api/groups/{gid}", params={"limit": 2}).json()
        assert len(page1["items"]) == 2
        assert page1["next_cursor"] == 2
        page2 = client.get(
            f"/api/groups/{gid}", params={"cursor": page1["next_cursor"], "limit": 2}
        ).json()
        assert len(page2["items"]) == 1
        assert page2["next_cursor"] is None

    def test_unknown_group_404(self, client):
        assert client.get("/api/groups/g999").status_code == 404

    def test_queue(self, client):
        body = client.get("/api/queue/unlabeled").json()
        assert [u["id"] for u in body["items"]] == ["q1"]
        assert body["items"][0]["pseudo_intents"] is None

    def test_schema(self, client):
        body = client.get("/api/schema").json()
        assert "booking" in body["intents"]
        assert body["exclusive"] == ["discourse_marker"]


class TestDecisions:
    def test_accepted_decision_updates_progress_and_log(self, client):
        r = client.post(
            "/api/decisions",
            json={
                "utterance_id": "p4",
                "verdicts": {"thanking": "invalidate"},
                "annotator": "ann1",
                "timestamp": "t1",
            },
        )
        assert r.status_code == 200
        body = r.json()
        assert body["final_intents"] == ["booking"]
        assert body["progress"]["decided_pseudo"] == 1
        assert body["progress"]["erroneous"] == 1
        logged = read_log(client.config.log_path)
        assert len(logged) == 1 and logged[0].utterance_id == "p4"

    def test_invariant_violation_is_409_with_reason(self, client):
        r = client.post(
            "/api/decisions",
            json={"utterance_id": "p1", "verdicts": {"booking": "invalidate"}},
        )
        assert r.status_code == 409
        assert r.json()["detail"]["code"] == "empty_result"

    def test_exclusivity_violation_409(self, client):
        r = client.post(
            "/api/decisions",
            json={"utterance_id": "p4", "replacement": ["discourse_marker"]},
        )
        assert r.status_code == 409
        assert r.json()["detail"]["code"] == "discourse_marker_exclusive"

    def test_unknown_utterance_409(self, client):
        r = client.post("/api/decisions", json={"utterance_id": "zz"})
        assert r.status_code == 409
        assert r.json()["detail"]["code"] == "unknown_utterance"


class TestAssets:
    def test_ui_assets_served_when_directory_given(self, tmp_path):
        assets = tmp_path / "dist"
        assets.mkdir()
        (assets / "index.html").write_text("<html><body>review ui</body></html>")
        session = ReviewSession(review_corpus())
        app = create_app(session, ServiceConfig(assets_dir=str(assets)))
        with TestClient(app) as c:
            r = c.get("/")
            assert r.status_code == 200
            assert "review ui" in r.text
            assert c.get("/api/schema").status_code == 200


class TestExport:
    def _decide_everything(self, client):
        for uid in ("p1", "p2", "p3", "p4"):
            assert client.post(
                "/api/decisions", json={"utterance_id": uid}
            ).status_code == 200
        assert client.post(
            "/api/decisions",
            json={"utterance_id": "q1", "replacement": ["greeting"]},
        ).status_code == 200

    def test_export_incomplete_409_lists_ids(self, client):
        r = client.post("/api/export")
        assert r.status_code == 409
        detail = r.json()["detail"]
        assert detail["code"] == "undecided"
        assert set(detail["utterance_ids"]) == {"p1", "p2", "p3", "p4", "q1"}

    def test_export_writes_final_corpus(self, client):
        self._decide_everything(client)
        r = client.post("/api/export")
        assert r.status_code == 200
        out = r.json()
        assert out["utterances"] == 6
        exported = load_corpus(client.config.export_path)
        assert all(
            u.provenance in ("manual", "validated") for u in exported.utterances()
        )

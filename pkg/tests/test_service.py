"""HTTP API tests: endpoints, envelopes, error mapping, SSE replay."""

import json

import pytest

from semem.engine import Engine
from semem.seed import build_seed_engine
from semem.client import SememClient, ServiceCallError


EXP1 = [
    {"shape": "hexagon", "color": "green", "size": [8, 8, 4],
     "position": [100, 200, 10], "orientation": [0, 0, 0]},
    {"shape": "cylinder", "color": "blue", "size": [4, 4, 20],
     "position": [150, 180, 10], "orientation": [0, 0, 0]},
    {"shape": "square", "color": "gray", "size": [60, 60, 40],
     "position": [250, 220, 20], "orientation": [0, 0, 0]},
    {"shape": "robot", "color": "white", "size": [500, 400, 600],
     "position": [0, 0, 0], "orientation": [0, 0, 0]},
]

EXP3 = [
    {"shape": "square", "color": "gray", "size": [60, 60, 40],
     "position": [250, 220, 20], "orientation": [0, 0, 0]},
    {"shape": "square", "color": "gray", "size": [20, 20, 6],
     "descriptor": [0, 0, 0, -1] + [0] * 12,
     "position": [300, 100, 5], "orientation": [0, 0, 0]},
    {"shape": "robot", "color": "white", "size": [500, 400, 600],
     "position": [0, 0, 0], "orientation": [0, 0, 0]},
]


@pytest.fixture
def client():
    with SememClient(engine=build_seed_engine()) as c:
        yield c


def raw(client):
    return client._client  # the underlying TestClient for envelope-level checks


class TestScene:
    def test_exp1_ingest_counts(self, client):
        report = client.ingest_scene(EXP1)
        assert len(report["instantiated"]) == 4
        assert report["unknowns"] == 0
        assert report["discarded"] == 0

    def test_exp3_ingest_opens_prompt(self, client):
        report = client.ingest_scene(EXP3)
        assert len(report["instantiated"]) == 2
        assert report["unknowns"] == 1
        assert report["prompt"]["kind"] == "label_unknown_object"
        events = client.events(0, limit=3)
        assert any(e["kind"] == "prompt_opened" for e in events)

    def test_empty_scene(self, client):
        report = client.ingest_scene([])
        assert report["instantiated"] == []
        assert report["unknowns"] == 0

    def test_malformed_scene_is_400(self, client):
        response = raw(client).post("/scene", json=[{"shape": 3}])
        assert response.status_code == 400
        body = response.json()
        assert body["ok"] is False
        assert body["error"]["code"] == "bad_scene_document"

    def test_ingest_while_prompt_open_is_409(self, client):
        client.ingest_scene(EXP3)
        with pytest.raises(ServiceCallError) as err:
            client.ingest_scene(EXP1)
        assert err.value.status == 409
        assert err.value.code == "dialogue_busy"

    def test_reset_scene(self, client):
        client.ingest_scene(EXP1)
        removed = client.reset_scene()["removed"]
        assert removed > 0
        assert client.graph()["scene_labels"] == []


class TestInstruction:
    def test_exp1_pick_executes(self, client):
        client.ingest_scene(EXP1)
        result = client.instruct("YuMi, pick the screw!")
        assert result["status"] == "executed"
        assert result["record"]["scene_delta"]["removed"] == ["screw_1"]
        events = client.events(0, limit=10)
        assert any(e["kind"] == "execution_recorded" for e in events)

    def test_confirmation_prompt_for_mismatched_color(self, client):
        blue_nut = [dict(EXP1[0], color="blue"), EXP1[3]]
        client.ingest_scene(blue_nut)
        result = client.instruct("YuMi, pick the green nut!")
        assert result["status"] == "needs_object_confirmation"
        assert result["prompt"]["kind"] == "confirm_object"

    def test_parse_error_is_422_with_code(self, client):
        response = raw(client).post("/instruction", json={"text": "YuMi, frobnicate!"})
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "no_patient_found"

    def test_strategy_passthrough(self, client):
        client.ingest_scene(EXP1)
        result = client.instruct("YuMi, pick the screw!", strategy="triplet")
        assert result["status"] == "executed"

    def test_unknown_type_word_is_domain_outcome_not_http_error(self, client):
        client.ingest_scene(EXP1)
        result = client.instruct("YuMi, pick the gear!")
        assert result["status"] == "unknown_type_word"


class TestPromptFlow:
    def test_answer_closes_and_executes(self, client):
        client.ingest_scene(EXP3)
        prompt = client.open_prompt()
        effects = client.answer(prompt["id"], {"mode": "create_type", "label": "new_obj"})
        assert [e["effect"] for e in effects] == \
            ["type_created", "signature_registered", "instance_created"]
        assert client.open_prompt() is None
        assert "new_obj_1" in client.graph()["scene_labels"]

    def test_confirm_accept_emits_execution_event(self, client):
        blue_nut = [dict(EXP1[0], color="blue"), EXP1[3]]
        client.ingest_scene(blue_nut)
        result = client.instruct("YuMi, pick the green nut!")
        client.answer(result["prompt"]["id"], {"accepted": True})
        kinds = [e["kind"] for e in client.events(0, limit=20)]
        closed = kinds.index("prompt_closed")
        assert "execution_recorded" in kinds[closed:]
        assert "nut_1" not in client.graph()["scene_labels"]

    def test_unknown_prompt_is_404(self, client):
        with pytest.raises(ServiceCallError) as err:
            client.answer(41, {"accepted": True})
        assert err.value.status == 404

    def test_shape_mismatch_is_422(self, client):
        client.ingest_scene(EXP3)
        prompt = client.open_prompt()
        with pytest.raises(ServiceCallError) as err:
            client.answer(prompt["id"], {"mode": "create_type"})
        assert err.value.status == 422
        assert err.value.code == "shape_mismatch"


class TestGraphAndLog:
    def test_graph_export_has_cross_links(self, client):
        client.ingest_scene(EXP1)
        export = client.graph()
        by_id = {n["id"]: n for n in export["nodes"]}
        cross = [e for e in export["edges"] if e["kind"] == "instance_of"]
        assert len(cross) == 4
        for edge in cross:
            assert by_id[edge["source"]]["subgraph"] == "scene"
            assert by_id[edge["dest"]]["subgraph"] == "prior"

    def test_log_slices(self, client):
        client.ingest_scene(EXP1)
        client.instruct("YuMi, pick the screw!")
        client.instruct("YuMi, pick the green nut!")
        assert len(client.log()) == 2
        assert len(client.log(start=1)) == 1
        assert len(client.log(limit=1)) == 1

    def test_execution_log_file_is_json_lines(self, tmp_path):
        path = tmp_path / "executions.jsonl"
        engine = build_seed_engine(log_path=path)
        with SememClient(engine=engine) as client:
            client.ingest_scene(EXP1)
            client.instruct("YuMi, pick the screw!")
            client.instruct("YuMi, pick the green nut!")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        records = [json.loads(line) for line in lines]
        assert records[0]["scene_delta"]["removed"] == ["screw_1"]
        assert records[1]["scene_delta"]["removed"] == ["nut_1"]

    def test_export_round_trips_through_persistence(self, client):
        from semem.persistence import parse_document

        doc = client.export()
        graph, signatures, skills = parse_document(json.dumps(doc))
        assert graph.find_type("Nut") is not None
        assert len(skills) == 8


class TestEnvelope:
    def test_request_id_echoed(self, client):
        response = raw(client).get("/health", headers={"X-Request-Id": "req-42"})
        assert response.json()["request_id"] == "req-42"

    def test_request_id_generated(self, client):
        body = raw(client).get("/health").json()
        assert body["request_id"]

    def test_error_envelope_carries_request_id(self, client):
        response = raw(client).post("/instruction", json={"text": ""},
                                    headers={"X-Request-Id": "req-7"})
        assert response.status_code == 422
        assert response.json()["request_id"] == "req-7"


class TestEvents:
    def test_replay_from_zero_is_gapless(self, client):
        client.ingest_scene(EXP1)
        client.instruct("YuMi, pick the screw!")
        total = client.health()["events"]
        events = client.events(0, limit=total)
        assert [e["seq"] for e in events] == list(range(total))

    def test_resume_from_cursor(self, client):
        client.ingest_scene(EXP1)
        mid = client.health()["events"]
        client.instruct("YuMi, pick the screw!")
        total = client.health()["events"]
        events = client.events(mid, limit=total - mid)
        assert [e["seq"] for e in events] == list(range(mid, total))

    def test_overflowed_cursor_is_410(self):
        engine = build_seed_engine(event_capacity=4)
        with SememClient(engine=engine) as client:
            client.ingest_scene(EXP1)
            client.instruct("YuMi, pick the screw!")
            client.instruct("YuMi, pick the green nut!")
            response = raw(client).get("/events", params={"from": 0})
            assert response.status_code == 410

    def test_graph_changed_carries_snapshot(self, client):
        client.ingest_scene(EXP1)
        events = client.events(0, limit=2)
        changed = next(e for e in events if e["kind"] == "graph_changed")
        assert "graph" in changed["payload"]
        assert changed["payload"]["graph"]["scene_labels"] == \
            ["box_1", "nut_1", "screw_1", "yumi_1"]


class TestPromptExpiry:
    def test_expired_prompt_is_410(self, monkeypatch):
        engine = build_seed_engine(prompt_timeout=10.0)
        fake_now = [100.0]
        monkeypatch.setattr("semem.session.time.monotonic", lambda: fake_now[0])
        with SememClient(engine=engine) as client:
            client.ingest_scene(EXP3)
            prompt_id = client.open_prompt()["id"]
            fake_now[0] += 11.0
            with pytest.raises(ServiceCallError) as err:
                client.answer(prompt_id, {"mode": "link_type", "type_label": "Box"})
            assert err.value.status == 410
            assert err.value.code == "prompt_expired"

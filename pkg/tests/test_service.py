import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from sketcheval.scoring import similarity
from sketcheval.service import Engine, make_server
from sketcheval.srg import srg_to_obj

TOKEN = "test-token-123"


@pytest.fixture(scope="module")
def server(water_dye):
    item = water_dye[0]
    engine = Engine([item], token=TOKEN, t_max=5)
    httpd = make_server(engine, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base
    httpd.shutdown()
    httpd.server_close()


def call(base, method, path, payload=None, token=None):
    data = json.dumps(payload).encode() if payload is not None else None
    req = urllib.request.Request(base + path, data=data, method=method)
    req.add_header("Content-Type", "application/json")
    if token:
        req.add_header("Authorization", f"Bearer {token}")
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def test_list_items(server):
    status, items = call(server, "GET", "/api/items")
    assert status == 200
    assert [i["item_id"] for i in items] == ["water-dye"]
    assert items[0]["highest_bloom"] == "Analyze"
    assert "gold" not in items[0]


def test_item_detail_withholds_gold(server):
    status, detail = call(server, "GET", "/api/items/water-dye")
    assert status == 200
    assert "gold" not in detail
    assert detail["ontology"]["root"] == "Dye_Diffusion"
    status, _ = call(server, "GET", "/api/items/water-dye?include_gold=true")
    assert status == 401
    status, detail = call(server, "GET", "/api/items/water-dye?include_gold=true", token=TOKEN)
    assert status == 200
    assert len(detail["gold"]["nodes"]) == 7


def test_unknown_item_404(server):
    status, body = call(server, "GET", "/api/items/nope")
    assert status == 404
    status, _ = call(server, "POST", "/api/items/nope/score", {"student": {}})
    assert status == 404


def test_score_parity_with_in_process(server, water_dye):
    item, student, _ = water_dye
    status, body = call(server, "POST", "/api/items/water-dye/score", {"student": srg_to_obj(student)})
    assert status == 200
    expected = similarity(student, item.gold, item.ontology, item.scoring).to_obj()
    assert body == json.loads(json.dumps(expected))  # byte-identical modulo JSON transport
    assert body["band"] == "Developing"


def test_score_schema_violation_400(server):
    status, body = call(server, "POST", "/api/items/water-dye/score", {"student": {"srg_version": "1"}})
    assert status == 400
    status, _ = call(server, "POST", "/api/items/water-dye/score", {"student": "nope"})
    assert status == 400


def test_graph_size_limit_413(server):
    huge = {
        "srg_version": "1",
        "item_id": "water-dye",
        "role": "student",
        "nodes": [{"id": f"n{i}", "concept": "X", "bloom": "Apply"} for i in range(600)],
        "edges": [],
    }
    status, _ = call(server, "POST", "/api/items/water-dye/score", {"student": huge})
    assert status == 413


def test_feedback_route(server, water_dye):
    _, student, _ = water_dye
    status, body = call(
        server, "POST", "/api/items/water-dye/feedback", {"student": srg_to_obj(student), "canvas": [1000, 800]}
    )
    assert status == 200
    assert body["report"]["proficiency_level"] == "Developing"
    assert sorted(body["report"]["what_needs_attention"]["missing_concepts"]) == [
        "Dye_Particle_Room",
        "Slower_Motion",
        "Temperature_Decrease",
    ]
    assert body["overlay"], "hints must produce overlay ops"
    assert all(op["op"] in ("rect", "arrow", "label") for op in body["overlay"])
    assert "report_text" in body


def test_session_flow_monotone_and_lock(server, water_dye):
    item, student, _ = water_dye
    status, state = call(server, "POST", "/api/sessions", {"item_id": "water-dye", "student": srg_to_obj(student)})
    assert status == 200
    sid = state["session_id"]
    assert state["t"] == 0 and not state["terminated"]
    assert state["hints"], "below-threshold start must carry hints"

    scores = [state["breakdown"]["s"]]
    graph = student
    from sketcheval.feedback import SimulatedStudent, hints as make_hints

    model = SimulatedStudent(item.gold, p=1.0, seed=5)
    steps = 0
    while not state["terminated"]:
        from sketcheval.feedback import DeficiencyKind, deficiencies
        b = similarity(graph, item.gold, item.ontology, item.scoring)
        defs = deficiencies(graph, item.gold, b.alignment, item.ontology)
        hs = make_hints(defs, item.phi)
        graph = model.revise(graph, hs)
        status, state = call(
            server,
            "POST",
            f"/api/sessions/{sid}/step",
            {"student": srg_to_obj(graph), "iteration": state["t"] + 1},
        )
        assert status == 200
        scores.append(state["breakdown"]["s"])
        steps += 1
        assert steps <= 10
    assert state["terminated_by"] == "threshold_met"
    assert all(b > a for a, b in zip(scores, scores[1:]))

    # Terminated session locks: further steps get 409.
    status, body = call(server, "POST", f"/api/sessions/{sid}/step", {"student": srg_to_obj(graph)})
    assert status == 409

    status, trace = call(server, "GET", f"/api/sessions/{sid}/trace")
    assert status == 200
    assert trace["terminated_by"] == "threshold_met"
    assert len(trace["iterations"]) == len(scores)
    assert [it["breakdown"]["s"] for it in trace["iterations"]] == scores


def test_unknown_session_404(server):
    status, _ = call(server, "GET", "/api/sessions/ghost/trace")
    assert status == 404
    status, _ = call(server, "POST", "/api/sessions/ghost/step", {"student": {}})
    assert status == 404


def test_stale_iteration_409(server, water_dye):
    _, student, _ = water_dye
    _, state = call(server, "POST", "/api/sessions", {"item_id": "water-dye", "student": srg_to_obj(student)})
    sid = state["session_id"]
    status, _ = call(
        server, "POST", f"/api/sessions/{sid}/step", {"student": srg_to_obj(student), "iteration": 99}
    )
    assert status == 409


def test_concurrent_steps_one_winner(server, water_dye):
    _, student, _ = water_dye
    _, state = call(server, "POST", "/api/sessions", {"item_id": "water-dye", "student": srg_to_obj(student)})
    sid = state["session_id"]
    payload = {"student": srg_to_obj(student), "iteration": 1}

    def step(_):
        return call(server, "POST", f"/api/sessions/{sid}/step", payload)[0]

    with ThreadPoolExecutor(max_workers=2) as pool:
        statuses = sorted(pool.map(step, range(2)))
    assert statuses == [200, 409]


def test_create_session_unknown_item_404(server, water_dye):
    _, student, _ = water_dye
    status, _ = call(server, "POST", "/api/sessions", {"item_id": "ghost", "student": srg_to_obj(student)})
    assert status == 404


def test_bad_json_body_400(server):
    req = urllib.request.Request(
        server + "/api/items/water-dye/score", data=b"{", method="POST"
    )
    try:
        with urllib.request.urlopen(req) as resp:
            status = resp.status
    except urllib.error.HTTPError as exc:
        status = exc.code
    assert status == 400


def test_session_idle_expiry(water_dye):
    item, student, _ = water_dye
    engine = Engine([item], idle_timeout_s=0.0)
    state = engine.create_session({"item_id": "water-dye", "student": srg_to_obj(student)})
    import time

    time.sleep(0.01)
    from sketcheval.service import ApiError

    with pytest.raises(ApiError) as exc:
        engine.session_or_404(state["session_id"])
    assert exc.value.status == 404


def test_session_journal_written(tmp_path, water_dye):
    item, student, _ = water_dye
    engine = Engine([item], journal=tmp_path / "journal.ndjson")
    state = engine.create_session({"item_id": "water-dye", "student": srg_to_obj(student)})
    engine.step_session(state["session_id"], {"student": srg_to_obj(student)})
    lines = [json.loads(l) for l in (tmp_path / "journal.ndjson").read_text().splitlines()]
    events = [l["event"] for l in lines]
    assert events == ["session_step", "session_created", "session_step"]
    assert {l.get("session_id") for l in lines} == {state["session_id"]}


def test_static_route_serves_bundle(tmp_path, water_dye):
    import threading
    import urllib.request

    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>workbench</body></html>")
    engine = Engine([water_dye[0]], static_dir=static)
    httpd = make_server(engine, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        base = f"http://127.0.0.1:{httpd.server_address[1]}"
        with urllib.request.urlopen(base + "/") as resp:
            assert resp.status == 200
            assert b"workbench" in resp.read()
        with urllib.request.urlopen(base + "/index.html") as resp:
            assert resp.status == 200
    finally:
        httpd.shutdown()
        httpd.server_close()

"""Gateway tests against a live server on an ephemeral port."""

import http.client
import json
import time

import pytest

from ambusim.scenario import parse_scenario
from ambusim.service import GatewayService
from conftest import scenario_doc_basic, scenario_doc_signal


@pytest.fixture
def gateway():
    service = GatewayService(parse_scenario(scenario_doc_signal()))
    port = service.start(port=0)
    yield service, port
    service.stop()


def get_json(port, path):
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5)
    try:
        conn.request("GET", path)
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read())
    finally:
        conn.close()


def post_command(port, envelope):
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5)
    try:
        body = json.dumps(envelope)
        conn.request("POST", "/commands", body=body,
                     headers={"Content-Type": "application/json"})
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read())
    finally:
        conn.close()


def envelope(seq, command, args=None, client="test"):
    return {"client": client, "seq": seq, "command": command, "args": args or {}}


def read_sse(port, path, want, timeout_s=5.0, headers=None):
    """Collect `want` SSE events as (id, payload) pairs, then disconnect."""
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=timeout_s)
    events = []
    try:
        conn.request("GET", path, headers=headers or {})
        resp = conn.getresponse()
        assert resp.status == 200
        assert resp.getheader("Content-Type").startswith("text/event-stream")
        deadline = time.monotonic() + timeout_s
        current_id = None
        while len(events) < want and time.monotonic() < deadline:
            line = resp.fp.readline()
            if not line:
                break
            line = line.decode().rstrip("\n")
            if line.startswith("id: "):
                current_id = int(line[4:])
            elif line.startswith("data: "):
                events.append((current_id, json.loads(line[6:])))
    finally:
        conn.close()
    return events


class TestState:
    def test_initial_state(self, gateway):
        _, port = gateway
        status, state = get_json(port, "/state")
        assert status == 200
        assert state["t_s"] == 0.0
        assert state["running"] is False
        assert state["ambulances"][0]["id"] == "a1"
        assert state["ambulances"][0]["status"] == "Free"
        c1 = state["controllers"][0]
        assert c1["phase"] == "P_A"
        assert c1["approaches"] == {"north": "Green", "south": "Red"}

    def test_state_carries_map_geometry(self, gateway):
        _, port = gateway
        _, state = get_json(port, "/state")
        world = state["network"]
        assert [n["id"] for n in world["nodes"]] == ["a", "b", "c", "d"]
        e1 = next(e for e in world["edges"] if e["id"] == "e1")
        assert e1["from"] == "a" and e1["to"] == "b"
        assert e1["stop_line"] == {"controller": "c1", "approach": "north"}
        assert next(e for e in world["edges"] if e["id"] == "e2")["stop_line"] is None
        assert world["hospitals"] == [{"id": "h1", "node": "d"}]

    def test_assignments_expose_route_edges(self, gateway):
        _, port = gateway
        post_command(port, envelope(1, "step_n", {"n": 1}, client="geom"))
        _, state = get_json(port, "/state")
        assignment = state["assignments"][0]
        assert assignment["route_to_scene"] == ["e1", "e2"]
        assert assignment["route_to_hospital"] == ["e3"]

    def test_root_lists_endpoints(self, gateway):
        _, port = gateway
        status, doc = get_json(port, "/")
        assert status == 200
        assert "/state" in doc["endpoints"]

    def test_unknown_path_404(self, gateway):
        _, port = gateway
        status, _ = get_json(port, "/nope")
        assert status == 404
        status, _ = get_json(port, "/ui/index.html")
        assert status == 404  # no console build configured


class TestCommands:
    def test_step_n_advances_clock_and_grants_extension(self, gateway):
        _, port = gateway
        status, reply = post_command(port, envelope(1, "step_n", {"n": 40}))
        assert status == 200
        assert reply["ok"] is True
        assert reply["t_s"] == 20.0
        _, state = get_json(port, "/state")
        assert state["t_s"] == 20.0
        assert state["controllers"][0]["mode"] == "Extended"
        _, metrics = get_json(port, "/metrics")
        assert metrics["extensions_granted"] == 1

    def test_inject_and_override(self, gateway):
        _, port = gateway
        status, reply = post_command(
            port, envelope(1, "inject_incident", {"node": "c", "id": "m1"}))
        assert status == 200
        assert reply["incident"] == "m1"
        _, state = get_json(port, "/state")
        assert any(i["id"] == "m1" and i["status"] == "Open"
                   for i in state["incidents"])
        # m1 entered the queue before the scripted i1 was injected, so the
        # only unit takes m1 on the next step and i1 must wait
        post_command(port, envelope(2, "step_n", {"n": 1}))
        _, state = get_json(port, "/state")
        assert state["assignments"][0]["incident"] == "m1"
        status, reply = post_command(
            port, envelope(3, "dispatch_override", {"incident": "i1", "unit": "a1"}))
        assert status == 422  # a1 is EnRoute, not Free

    def test_seq_must_increase_per_client(self, gateway):
        _, port = gateway
        status, _ = post_command(port, envelope(5, "pause"))
        assert status == 200
        status, reply = post_command(port, envelope(5, "pause"))
        assert status == 409
        assert reply["ok"] is False
        status, _ = post_command(port, envelope(4, "pause"))
        assert status == 409
        status, _ = post_command(port, envelope(6, "pause"))
        assert status == 200
        # an independent client starts its own numbering
        status, _ = post_command(port, envelope(1, "pause", client="other"))
        assert status == 200

    def test_malformed_envelopes(self, gateway):
        _, port = gateway
        status, _ = post_command(port, {"client": "x", "seq": 1, "command": "warp"})
        assert status == 400
        status, _ = post_command(port, {"client": "", "seq": 1, "command": "pause"})
        assert status == 400
        status, _ = post_command(port, {"client": "x", "seq": "1", "command": "pause"})
        assert status == 400
        status, _ = post_command(
            port, envelope(1, "step_n", {"n": 0}))
        assert status == 400
        conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5)
        conn.request("POST", "/commands", body="{not json",
                     headers={"Content-Type": "application/json"})
        assert conn.getresponse().status == 400
        conn.close()

    def test_rejected_command_keeps_state(self, gateway):
        _, port = gateway
        _, before = get_json(port, "/state")
        status, reply = post_command(
            port, envelope(1, "inject_incident", {"node": "nowhere"}))
        assert status == 422
        assert "nowhere" in reply["error"]
        _, after = get_json(port, "/state")
        assert before == after

    def test_load_replaces_world(self, gateway):
        _, port = gateway
        post_command(port, envelope(1, "step_n", {"n": 10}))
        status, reply = post_command(
            port, envelope(2, "load", {"scenario": scenario_doc_basic()}))
        assert status == 200
        _, state = get_json(port, "/state")
        assert state["t_s"] == 0.0
        assert state["running"] is False
        assert [i["id"] for i in state["incidents"]] == []
        status, _ = post_command(port, envelope(3, "load", {"scenario": {"schema_version": 9}}))
        assert status == 422

    def test_start_and_pause_drive_wall_clock(self):
        service = GatewayService(parse_scenario(scenario_doc_signal()), rate=50.0)
        port = service.start(port=0)
        try:
            status, _ = post_command(port, envelope(1, "start"))
            assert status == 200
            _, state = get_json(port, "/state")
            assert state["running"] is True
            deadline = time.monotonic() + 5.0
            t_seen = 0.0
            while time.monotonic() < deadline:
                _, state = get_json(port, "/state")
                t_seen = state["t_s"]
                if t_seen > 0:
                    break
                time.sleep(0.05)
            assert t_seen > 0
            status, _ = post_command(port, envelope(2, "pause"))
            assert status == 200
            _, state = get_json(port, "/state")
            assert state["running"] is False
        finally:
            service.stop()


class TestEventStream:
    def test_backlog_replay(self, gateway):
        _, port = gateway
        post_command(port, envelope(1, "step_n", {"n": 41}))
        events = read_sse(port, "/events?after=0", want=3)
        kinds = [e[1]["kind"] for e in events]
        assert kinds[:3] == ["IncidentCreated", "Dispatch", "Detection"]
        ids = [e[0] for e in events]
        assert ids == sorted(ids)
        assert ids[0] == 1

    def test_resume_from_cursor(self, gateway):
        _, port = gateway
        post_command(port, envelope(1, "step_n", {"n": 41}))
        first_two = read_sse(port, "/events?after=0", want=2)
        cursor = first_two[-1][0]
        resumed = read_sse(port, f"/events?after={cursor}", want=1)
        assert resumed[0][0] == cursor + 1
        via_header = read_sse(port, "/events", want=1,
                              headers={"Last-Event-ID": str(cursor)})
        assert via_header[0][0] == cursor + 1

    def test_bad_cursor_rejected(self, gateway):
        _, port = gateway
        status, _ = get_json(port, "/events?after=xyz")
        assert status == 400

    def test_live_events_follow_commands(self, gateway):
        import threading
        _, port = gateway
        got = []
        def reader():
            got.extend(read_sse(port, "/events?after=0", want=2, timeout_s=5.0))
        t = threading.Thread(target=reader)
        t.start()
        time.sleep(0.2)  # let the stream attach before producing events
        post_command(port, envelope(1, "step_n", {"n": 1}))
        t.join(timeout=6.0)
        assert not t.is_alive()
        assert [e[1]["kind"] for e in got] == ["IncidentCreated", "Dispatch"]


class TestUiServing:
    def test_serves_static_files_with_traversal_guard(self, tmp_path):
        (tmp_path / "index.html").write_text("<h1>console</h1>")
        (tmp_path / "app.js").write_text("export {};")
        service = GatewayService(parse_scenario(scenario_doc_basic()), ui_dir=tmp_path)
        port = service.start(port=0)
        try:
            conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5)
            conn.request("GET", "/ui/")
            resp = conn.getresponse()
            assert resp.status == 200
            assert b"console" in resp.read()
            assert resp.getheader("Content-Type").startswith("text/html")
            conn.request("GET", "/ui/app.js")
            resp = conn.getresponse()
            assert resp.status == 200
            assert resp.getheader("Content-Type").startswith("text/javascript")
            resp.read()
            conn.request("GET", "/ui/../secret.txt")
            resp = conn.getresponse()
            assert resp.status == 404
            resp.read()
            conn.close()
        finally:
            service.stop()

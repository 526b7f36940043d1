"""HTTP gateway around one simulation: observe state, stream events, command.

The engine runs in a single loop thread; every read and write goes through
one lock, so commands land between steps by construction. The event feed is
server-sent events, resumable from any sequence number because the engine
keeps its whole log.

Endpoints:
  GET  /state            world snapshot plus run status
  GET  /metrics          metrics report for the run so far
  GET  /events?after=N   SSE stream, replaying seq > N first (Last-Event-ID works too)
  POST /commands         envelope {client, seq, command, args}
  GET  /ui/...           static dispatcher console, when a build is present
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .scenario import Scenario, ScenarioInvalid, build_simulation, parse_scenario
from .sim import CommandRejected, canonical_json

COMMANDS = ("inject_incident", "dispatch_override", "start", "pause", "step_n", "load")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class GatewayService:
    """Owns the simulation, its pacing loop, and command admission."""

    def __init__(self, scenario: Scenario, rate: float = 1.0, ui_dir: str | Path | None = None):
        if rate <= 0:
            raise ValueError("rate must be > 0")
        self._lock = threading.RLock()
        self._wake = threading.Condition(self._lock)
        self.sim = build_simulation(scenario)
        self.running = False
        self.rate = rate
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self._client_seq: dict[str, int] = {}
        self._shutdown = threading.Event()
        self._loop_thread: threading.Thread | None = None
        self._server: ThreadingHTTPServer | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self, host: str = "127.0.0.1", port: int = 0) -> int:
        """Bind, start the HTTP server and the pacing loop; returns the port."""
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer((host, port), handler)
        self._server.daemon_threads = True
        threading.Thread(target=self._server.serve_forever, daemon=True).start()
        self._loop_thread = threading.Thread(target=self._pace_loop, daemon=True)
        self._loop_thread.start()
        return self._server.server_address[1]

    def stop(self) -> None:
        self._shutdown.set()
        with self._wake:
            self._wake.notify_all()
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()

    def serve_forever(self) -> None:
        try:
            while not self._shutdown.wait(0.5):
                pass
        except KeyboardInterrupt:
            self.stop()

    def _pace_loop(self) -> None:
        while not self._shutdown.is_set():
            with self._lock:
                interval = self.sim.config.dt_s / self.rate
                if self.running:
                    self.sim.step()
                    self._wake.notify_all()
            self._shutdown.wait(interval)

    # -- command admission ---------------------------------------------------

    def apply_command(self, envelope: dict) -> dict:
        if not isinstance(envelope, dict):
            raise _BadRequest("envelope must be a JSON object")
        client = envelope.get("client")
        seq = envelope.get("seq")
        command = envelope.get("command")
        args = envelope.get("args", {})
        if not isinstance(client, str) or not client:
            raise _BadRequest("client must be a non-empty string")
        if not isinstance(seq, int) or isinstance(seq, bool):
            raise _BadRequest("seq must be an integer")
        if command not in COMMANDS:
            raise _BadRequest(f"unknown command {command!r}")
        if not isinstance(args, dict):
            raise _BadRequest("args must be an object")
        with self._lock:
            last = self._client_seq.get(client)
            if last is not None and seq <= last:
                raise _StaleSeq(f"seq {seq} not above {last} for client {client}")
            self._client_seq[client] = seq
            result = self._dispatch_command(command, args)
            self._wake.notify_all()
            return {"ok": True, "client": client, "seq": seq, **result}

    def _dispatch_command(self, command: str, args: dict) -> dict:
        if command == "start":
            self.running = True
            return {}
        if command == "pause":
            self.running = False
            return {}
        if command == "step_n":
            n = args.get("n", 1)
            if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 100000:
                raise _BadRequest("n must be an integer in [1, 100000]")
            for _ in range(n):
                self.sim.step()
            return {"t_s": self.sim.t_s}
        if command == "inject_incident":
            node = args.get("node")
            if not isinstance(node, str):
                raise _BadRequest("node must be a string")
            incident_id = args.get("id")
            if incident_id is not None and not isinstance(incident_id, str):
                raise _BadRequest("id must be a string when given")
            created = self.sim.inject_incident(node, incident_id)
            return {"incident": created}
        if command == "dispatch_override":
            incident = args.get("incident")
            unit = args.get("unit")
            if not isinstance(incident, str) or not isinstance(unit, str):
                raise _BadRequest("incident and unit must be strings")
            self.sim.override_assignment(incident, unit)
            return {"incident": incident, "unit": unit}
        if command == "load":
            doc = args.get("scenario")
            scenario = parse_scenario(doc)
            self.sim = build_simulation(scenario)
            self.running = False
            return {"t_s": self.sim.t_s}
        raise _BadRequest(f"unknown command {command!r}")

    # -- views ----------------------------------------------------------------

    def state(self) -> dict:
        with self._lock:
            snap = self.sim.snapshot()
            snap["running"] = self.running
            snap["rate"] = self.rate
            snap["network"] = self._world_geometry()
            return snap

    def _world_geometry(self) -> dict:
        """Static map layout for the console: nodes, edges, hospitals."""
        net = self.sim.net
        return {
            "nodes": [
                {"id": n.id, "x": n.x, "y": n.y} for n in
                sorted(net.nodes.values(), key=lambda n: n.id)
            ],
            "edges": [
                {
                    "id": e.id, "from": e.from_node, "to": e.to_node,
                    "length_m": e.length_m,
                    "stop_line": (
                        {"controller": e.stop_line_controller[0],
                         "approach": e.stop_line_controller[1]}
                        if e.stop_line_controller else None
                    ),
                }
                for e in sorted(net.edges.values(), key=lambda e: e.id)
            ],
            "hospitals": [
                {"id": h.id, "node": h.location}
                for h in sorted(self.sim.hospitals, key=lambda h: h.id)
            ],
        }

    def metrics(self) -> dict:
        with self._lock:
            return self.sim.report().to_dict()

    def events_after(self, after: int) -> list:
        with self._lock:
            return [e for e in self.sim.events if e.seq > after]

    def wait_for_events(self, after: int, timeout: float) -> list:
        with self._wake:
            fresh = [e for e in self.sim.events if e.seq > after]
            if fresh:
                return fresh
            self._wake.wait(timeout)
            return [e for e in self.sim.events if e.seq > after]


class _BadRequest(Exception):
    pass


class _StaleSeq(Exception):
    pass


def _make_handler(service: GatewayService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # tests stay quiet
            pass

        def _send_json(self, status: int, doc: dict) -> None:
            body = canonical_json(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            url = urlparse(self.path)
            if url.path == "/state":
                self._send_json(200, service.state())
            elif url.path == "/metrics":
                self._send_json(200, service.metrics())
            elif url.path == "/events":
                self._stream_events(url)
            elif url.path == "/" :
                self._send_json(200, {
                    "endpoints": ["/state", "/metrics", "/events", "/commands", "/ui/"],
                })
            elif url.path == "/ui" or url.path.startswith("/ui/"):
                self._send_ui(url.path)
            else:
                self._send_json(404, {"ok": False, "error": "not found"})

        def do_POST(self) -> None:
            url = urlparse(self.path)
            if url.path != "/commands":
                self._send_json(404, {"ok": False, "error": "not found"})
                return
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                envelope = json.loads(raw)
            except json.JSONDecodeError as exc:
                self._send_json(400, {"ok": False, "error": f"bad JSON: {exc}"})
                return
            try:
                self._send_json(200, service.apply_command(envelope))
            except _BadRequest as exc:
                self._send_json(400, {"ok": False, "error": str(exc)})
            except _StaleSeq as exc:
                self._send_json(409, {"ok": False, "error": str(exc)})
            except (CommandRejected, ScenarioInvalid) as exc:
                self._send_json(422, {"ok": False, "error": str(exc)})

        def _stream_events(self, url) -> None:
            after = 0
            query = parse_qs(url.query)
            if "after" in query:
                try:
                    after = int(query["after"][0])
                except ValueError:
                    self._send_json(400, {"ok": False, "error": "after must be an integer"})
                    return
            elif self.headers.get("Last-Event-ID"):
                try:
                    after = int(self.headers["Last-Event-ID"])
                except ValueError:
                    after = 0
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Connection", "close")
            self.end_headers()
            try:
                while True:
                    fresh = service.wait_for_events(after, timeout=0.25)
                    if not fresh:
                        self.wfile.write(b": ping\n\n")
                        self.wfile.flush()
                        continue
                    for event in fresh:
                        data = event.to_json().encode()
                        self.wfile.write(b"id: %d\ndata: %s\n\n" % (event.seq, data))
                        after = max(after, event.seq)
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                return

        def _send_ui(self, path: str) -> None:
            if service.ui_dir is None:
                self._send_json(404, {"ok": False, "error": "no console build is installed"})
                return
            rel = path[len("/ui"):].lstrip("/") or "index.html"
            root = service.ui_dir.resolve()
            target = (root / rel).resolve()
            if root not in target.parents and target != root:
                self._send_json(404, {"ok": False, "error": "not found"})
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                self._send_json(404, {"ok": False, "error": "not found"})
                return
            body = target.read_bytes()
            self.send_response(200)
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler

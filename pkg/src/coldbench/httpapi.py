"""JSON/REST front end for the fridge hub, plus the live demo testbed.

Paths::

    POST /fridges                         -> {"fridge_id": ...}
    POST /fridges/{id}/events             -> {"seq": n}
    GET  /fridges/{id}/state
    GET  /fridges/{id}/history?since=&item=
    GET  /fridges/{id}/poll?cursor=&timeout_ms=
    GET  /fridges/{id}/leds
    GET  /fridges/{id}/recommendations
    GET  /fridges/{id}/alerts
    GET  /fridges/{id}/search?q=
    PUT  /fridges/{id}/items/{name}/tags
    POST /fridges/{id}/sim/commands       (live testbed only)
    GET  /console/...                     (static assets, when configured)

Every GET supports JSONP via ``callback=``.  Errors come back as
``{"error": code, "message": text}``.  Long polls block the handler thread
only; the server is threading, so publishes are never stalled by waiters.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .clock import Scheduler
from .config import TestbedConfig
from .detection import DetectionEngine
from .recognition import Canonicalizer, RecognitionPipeline, SimulatedRecognizer
from .service import (
    BadEventError,
    DEFAULT_POLL_TIMEOUT_MS,
    FridgeHub,
    UnknownFridgeError,
)
from .sim import ScriptError, VirtualFridge
from .takeout import TakeoutConfig, TakeoutTracker, led_overlay

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".mjs": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".json": "application/json; charset=utf-8",
}


class LiveTestbed:
    """One live fridge: sim + engine + recognition wired into the hub.

    A pump thread advances the shared scheduler at wall-clock pace, so a
    browser console sees readings, detections and recognitions in real time.
    Sim commands from the API are validated eagerly and queued onto the
    scheduler.
    """

    def __init__(self, hub: FridgeHub, config: TestbedConfig | None = None,
                 flavor: str = "mix", fridge_id: str | None = None,
                 seed: int | None = None):
        self.config = config or TestbedConfig()
        self.config.validate()
        self.hub = hub
        self.fridge_id = hub.register_fridge(fridge_id)
        self.scheduler = Scheduler()
        flavor_cfg = self.config.flavors[flavor]
        if seed is None:
            # live demos should not replay one fixed recognition fate
            seed = int.from_bytes(os.urandom(4), "big")

        sim_cfg = type(self.config.sim)(**{
            **self.config.sim.__dict__,
            "position_error_prob": flavor_cfg.position_error_prob,
            "rng_seed": seed,
        })
        self.sim = VirtualFridge(sim_cfg, self.config.flavor_items(flavor), self.scheduler)
        self.engine = DetectionEngine(
            position_count=sim_cfg.position_count,
            thresholds=self.config.thresholds,
            engine_config=self.config.engine,
            on_event=self._on_engine_event,
        )
        rec_cfg = type(self.config.recognizer)(**{
            **self.config.recognizer.__dict__, "p_hit": flavor_cfg.p_hit,
        })
        recognizer = SimulatedRecognizer(rec_cfg, self.config.raw_phrases, seed=seed)
        canon = Canonicalizer.from_pairs(self.config.canonical_rules)
        self.pipeline = RecognitionPipeline(
            recognizer, canon, rec_cfg, scheduler=self.scheduler, on_result=self._on_result
        )
        self.tracker = TakeoutTracker(TakeoutConfig())
        self._active_alerts: set[tuple[int, str]] = set()

        self.sim.on_door.append(self._on_door)
        self.sim.on_reading.append(self.engine.ingest_reading)
        self.sim.on_frame.append(lambda fr: self.pipeline.submit(fr, fr.activity_index))
        hub.now_ms = self.scheduler.now_ms

        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # -- event plumbing -------------------------------------------------------

    def _on_door(self, ev):
        if ev.kind == "door_open":
            self.engine.door_open(ev.t_ms)
            self._refresh_guidance()
        else:
            self.engine.door_close(ev.t_ms)

    def _on_result(self, result):
        if result.name is not None:
            self.engine.ingest_recognition(
                result.name, result.activity_id, self.scheduler.now_ms()
            )

    def _on_engine_event(self, event):
        seq = self.hub.publish(self.fridge_id, event)
        self.tracker.apply(self.hub.events(self.fridge_id)[seq - 1])

    def _refresh_guidance(self) -> None:
        state = self.hub.get_state(self.fridge_id)
        now = self.scheduler.now_ms()
        alerts = self.tracker.expiry_alerts(state, now)
        greens = [pos for pos, _ in self.tracker.door_open_recommendations(state, now)]
        # newly expired items go out as alert events; repeats stay silent
        for pos, name in alerts:
            if (pos, name) not in self._active_alerts:
                self.hub.publish(self.fridge_id, {
                    "kind": "alert", "position": pos,
                    "item": state.positions.get(pos), "emitted_at": now,
                })
        self._active_alerts = set(alerts)
        overlay = led_overlay([pos for pos, _ in alerts], greens)
        for pos in range(self.sim.config.position_count):
            self.engine.set_led(pos, overlay.get(pos, "off"))
        self.hub.set_leds(self.fridge_id, self.engine.leds.as_dict())

    # -- commands ----------------------------------------------------------------

    def command(self, data: dict) -> dict:
        """Validate and queue one console command against current sim state."""
        kind = data.get("command")
        if kind == "open":
            if self.sim.door_open_flag:
                raise ScriptError("door already open")
            self._queue(self.sim.open_door)
        elif kind == "close":
            if not self.sim.door_open_flag:
                raise ScriptError("door is not open")
            self._queue(self.sim.close_door)
        elif kind == "place":
            item, position = data.get("item"), data.get("position")
            if not self.sim.door_open_flag:
                raise ScriptError("open the door first")
            if item not in self.sim.catalog:
                raise ScriptError(f"unknown item {item!r}")
            if not isinstance(position, int) or position in self.sim.slots:
                raise ScriptError(f"position {position!r} unavailable")
            self._queue(lambda: self.sim.place(item, position))
        elif kind == "remove":
            position = data.get("position")
            if not self.sim.door_open_flag:
                raise ScriptError("open the door first")
            if position not in self.sim.slots:
                raise ScriptError(f"position {position!r} is empty")
            self._queue(lambda: self.sim.remove(position))
        else:
            raise ScriptError(f"unknown command {kind!r}")
        return {"status": "queued", "command": kind}

    def _queue(self, fn) -> None:
        def safely():
            try:
                fn()
            except ScriptError as exc:
                log.warning("sim command rejected: %s", exc)

        self.scheduler.schedule(self.scheduler.now_ms() + 1, safely)

    def items_available(self) -> list[str]:
        placed = {slot.item.name for slot in self.sim.slots.values()}
        return [n for n in self.sim.catalog if n not in placed]

    # -- pump ---------------------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._pump, name="testbed-pump", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2)

    def _pump(self) -> None:
        start_wall = time.monotonic()
        start_virtual = self.scheduler.now_ms()
        while not self._stop.is_set():
            target = start_virtual + int((time.monotonic() - start_wall) * 1000)
            try:
                self.scheduler.run_due(target)
            except Exception:  # keep the pump alive; surface in logs
                log.exception("testbed pump error")
            time.sleep(0.05)


class FridgeApiServer:
    """Threading HTTP server exposing one hub (and optional live testbeds)."""

    def __init__(self, hub: FridgeHub, host: str = "127.0.0.1", port: int = 0,
                 console_dir: str | Path | None = None):
        self.hub = hub
        self.console_dir = Path(console_dir) if console_dir else None
        self.testbeds: dict[str, LiveTestbed] = {}
        app = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # route through logging, not stderr
                log.debug("http: " + fmt, *args)

            def do_GET(self):
                app.dispatch(self, "GET")

            def do_POST(self):
                app.dispatch(self, "POST")

            def do_PUT(self):
                app.dispatch(self, "PUT")

        self.server = ThreadingHTTPServer((host, port), Handler)
        self.server.daemon_threads = True

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    def add_testbed(self, testbed: LiveTestbed) -> None:
        self.testbeds[testbed.fridge_id] = testbed

    def serve_forever(self) -> None:
        self.server.serve_forever()

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        thread.start()
        return thread

    def shutdown(self) -> None:
        self.server.shutdown()
        self.server.server_close()

    # -- request handling ---------------------------------------------------------

    def dispatch(self, handler: BaseHTTPRequestHandler, method: str) -> None:
        parsed = urlparse(handler.path)
        path = parsed.path
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        callback = query.get("callback")
        try:
            status, payload = self.route(handler, method, path, query)
        except UnknownFridgeError as exc:
            status, payload = 404, {"error": "not_found", "message": f"unknown fridge {exc.args[0]}"}
        except (BadEventError, ScriptError, ValueError) as exc:
            status, payload = 400, {"error": "bad_request", "message": str(exc)}
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("request failed")
            status, payload = 500, {"error": "server_error", "message": str(exc)}
        if payload is None:
            return  # handler already wrote the response (static files)
        body_text = json.dumps(payload)
        if callback is not None and method == "GET":
            body = f"{callback}({body_text});".encode()
            content_type = "application/javascript; charset=utf-8"
        else:
            body = body_text.encode()
            content_type = "application/json; charset=utf-8"
        handler.send_response(status)
        handler.send_header("Content-Type", content_type)
        handler.send_header("Content-Length", str(len(body)))
        handler.send_header("Access-Control-Allow-Origin", "*")
        handler.end_headers()
        handler.wfile.write(body)

    def route(self, handler, method: str, path: str, query: dict):
        if path.startswith("/console") and method == "GET":
            return self._static(handler, path)
        if path == "/fridges" and method == "POST":
            return 200, {"fridge_id": self.hub.register_fridge()}

        m = re.match(r"^/fridges/([^/]+)(/.*)?$", path)
        if not m:
            return 404, {"error": "not_found", "message": f"no route for {path}"}
        fridge_id, rest = m.group(1), m.group(2) or ""

        if rest == "/events" and method == "POST":
            event = self._read_json(handler)
            return 200, {"seq": self.hub.publish(fridge_id, event)}
        if rest == "/state" and method == "GET":
            # head_seq lets a client resume polling right after this snapshot
            state, head = self.hub.get_state_with_head(fridge_id)
            body = state.to_dict()
            body["head_seq"] = head
            return 200, body
        if rest == "/history" and method == "GET":
            since = int(query["since"]) if "since" in query and query["since"] else None
            item = query.get("item") or None
            entries = self.hub.get_history(fridge_id, since=since, item_name=item)
            return 200, [e.to_dict() for e in entries]
        if rest == "/poll" and method == "GET":
            cursor = int(query.get("cursor", 0))
            timeout_ms = int(query.get("timeout_ms", DEFAULT_POLL_TIMEOUT_MS))
            envs = self.hub.poll(fridge_id, cursor, timeout_ms)
            return 200, [e.to_dict() for e in envs]
        if rest == "/leds" and method == "GET":
            leds = self.hub.get_leds(fridge_id)
            return 200, {str(k): v for k, v in sorted(leds.items())}
        if rest == "/recommendations" and method == "GET":
            return 200, self._guidance(fridge_id)["recommendations"]
        if rest == "/alerts" and method == "GET":
            return 200, self._guidance(fridge_id)["alerts"]
        if rest == "/search" and method == "GET":
            return 200, self._search(fridge_id, query.get("q", ""))

        m_tags = re.match(r"^/items/([^/]+)/tags$", rest)
        if m_tags and method == "PUT":
            data = self._read_json(handler)
            tags = data.get("tags")
            if not isinstance(tags, list):
                raise BadEventError("body must be {\"tags\": [...]}")
            return 200, {"name": m_tags.group(1), "tags": self.hub.set_tags(fridge_id, m_tags.group(1), tags)}

        if rest == "/sim/commands" and method == "POST":
            testbed = self.testbeds.get(fridge_id)
            if testbed is None:
                return 404, {"error": "not_found", "message": "no live testbed for this fridge"}
            data = self._read_json(handler)
            return 200, testbed.command(data)
        if rest == "/sim/items" and method == "GET":
            testbed = self.testbeds.get(fridge_id)
            if testbed is None:
                return 404, {"error": "not_found", "message": "no live testbed for this fridge"}
            return 200, {"items": testbed.items_available(),
                         "door_open": testbed.sim.door_open_flag,
                         "positions": testbed.sim.config.position_count}

        return 404, {"error": "not_found", "message": f"no route for {method} {path}"}

    # -- helpers ---------------------------------------------------------------

    def _guidance(self, fridge_id: str) -> dict:
        testbed = self.testbeds.get(fridge_id)
        tracker = testbed.tracker if testbed else TakeoutTracker().replay(self.hub.events(fridge_id))
        state = self.hub.get_state(fridge_id)
        now = self.hub.now_ms()
        alerts = tracker.expiry_alerts(state, now)
        recs = tracker.door_open_recommendations(state, now)
        overlay = led_overlay([p for p, _ in alerts], [p for p, _ in recs])
        for pos, color in overlay.items():
            self.hub.set_led(fridge_id, pos, color)
        return {
            "alerts": [{"position": p, "name": n, "reason": "dwell exceeded"} for p, n in alerts],
            "recommendations": [{"position": p, "name": n, "reason": "usual take-out time"} for p, n in recs],
        }

    def _search(self, fridge_id: str, q: str) -> list[dict]:
        testbed = self.testbeds.get(fridge_id)
        tracker = testbed.tracker if testbed else TakeoutTracker().replay(self.hub.events(fridge_id))
        state = self.hub.get_state(fridge_id)
        hits = tracker.search(q, state, self.hub.get_tags(fridge_id))
        for pos, _ in hits:
            self.hub.set_led(fridge_id, pos, "green")
        return [{"position": p, "name": n} for p, n in hits]

    def _read_json(self, handler) -> dict:
        length = int(handler.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(handler.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise BadEventError(f"invalid JSON body: {exc}")

    def _static(self, handler, path: str):
        if self.console_dir is None:
            return 404, {"error": "not_found", "message": "console assets not configured"}
        rel = path[len("/console"):].lstrip("/") or "index.html"
        target = (self.console_dir / rel).resolve()
        if not str(target).startswith(str(self.console_dir.resolve())) or not target.is_file():
            return 404, {"error": "not_found", "message": f"no asset {rel}"}
        body = target.read_bytes()
        handler.send_response(200)
        handler.send_header("Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream"))
        handler.send_header("Content-Length", str(len(body)))
        handler.end_headers()
        handler.wfile.write(body)
        return 200, None

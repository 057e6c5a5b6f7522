"""HTTP façade over the scoring engine.

Routes (JSON over HTTP, stdlib server, desk-scale):

    GET  /api/items                      item summaries
    GET  /api/items/{id}                 item detail; gold + phi only with
                                         ?include_gold=true and a bearer token
    POST /api/items/{id}/score           {student SRG-JSON} -> breakdown
    POST /api/items/{id}/feedback        {student SRG-JSON} -> report + overlay
    POST /api/sessions                   {item_id, srg} -> session state
    POST /api/sessions/{sid}/step        {srg, iteration?} -> next state
    GET  /api/sessions/{sid}/trace       revision-loop trace

The service adds no scoring logic of its own: payloads come straight from
the in-process engine, so HTTP results are bit-identical to library calls.
Static files (the workbench bundle) are served from an optional directory.
"""
from __future__ import annotations

import json
import mimetypes
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .feedback import (
    HINT_LIMIT_DEFAULT,
    T_MAX_DEFAULT,
    LoopIteration,
    LoopTermination,
    LoopTrace,
    VisualHint,
    deficiencies,
    feedback_report,
    hints,
    render_overlay,
)
from .items import ItemSpec
from .ontology import ontology_to_obj
from .scoring import SimilarityBreakdown, similarity
from .srg import Srg, srg_from_obj, srg_to_obj

MAX_GRAPH_ELEMENTS = 500  # nodes + edges per submitted graph
SESSION_IDLE_TIMEOUT_S = 3600.0
_DEFAULT_CANVAS = (1000, 800)


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class Session:
    session_id: str
    item_id: str
    current: Srg
    t: int = 0
    t_max: int = T_MAX_DEFAULT
    iterations: list[LoopIteration] = field(default_factory=list)
    terminated_by: LoopTermination | None = None
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def terminated(self) -> bool:
        return self.terminated_by is not None

    def trace(self) -> LoopTrace:
        return LoopTrace(
            iterations=tuple(self.iterations),
            terminated_by=self.terminated_by or LoopTermination.MAX_ITERATIONS,
            t_max=self.t_max,
        )


class Engine:
    """Request-independent application state: items, sessions, journal."""

    def __init__(
        self,
        items: list[ItemSpec],
        token: str | None = None,
        static_dir: Path | None = None,
        journal: Path | None = None,
        t_max: int = T_MAX_DEFAULT,
        idle_timeout_s: float = SESSION_IDLE_TIMEOUT_S,
    ):
        self.items = {i.item_id: i for i in items}
        self.token = token
        self.static_dir = Path(static_dir) if static_dir else None
        self.journal = Path(journal) if journal else None
        self.t_max = t_max
        self.idle_timeout_s = idle_timeout_s
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._journal_lock = threading.Lock()

    # -- helpers ----------------------------------------------------------

    def _journal_write(self, event: dict):
        if not self.journal:
            return
        with self._journal_lock:
            with self.journal.open("a") as fh:
                fh.write(json.dumps(event) + "\n")

    def item_or_404(self, item_id: str) -> ItemSpec:
        item = self.items.get(item_id)
        if item is None:
            raise ApiError(404, f"unknown item {item_id!r}")
        return item

    def session_or_404(self, sid: str) -> Session:
        with self._sessions_lock:
            session = self.sessions.get(sid)
            if session is not None and time.time() - session.updated > self.idle_timeout_s:
                del self.sessions[sid]
                session = None
        if session is None:
            raise ApiError(404, f"unknown session {sid!r}")
        return session

    def parse_graph(self, obj, item: ItemSpec) -> Srg:
        if not isinstance(obj, dict):
            raise ApiError(400, "expected an SRG-JSON object")
        size = len(obj.get("nodes") or []) + len(obj.get("edges") or [])
        if size > MAX_GRAPH_ELEMENTS:
            raise ApiError(413, f"graph has {size} elements; limit is {MAX_GRAPH_ELEMENTS}")
        try:
            g = srg_from_obj(obj)
        except Exception as exc:
            raise ApiError(400, f"invalid SRG document: {exc}") from exc
        return g

    def _hints_payload(self, b: SimilarityBreakdown, g: Srg, item: ItemSpec) -> list[VisualHint]:
        if b.s >= item.scoring.tau:
            return []
        defs = deficiencies(g, item.gold, b.alignment, item.ontology)
        return hints(defs, item.phi, limit=HINT_LIMIT_DEFAULT)

    # -- routes -----------------------------------------------------------

    def list_items(self) -> list[dict]:
        out = []
        for item_id in sorted(self.items):
            item = self.items[item_id]
            out.append(
                {
                    "item_id": item.item_id,
                    "prompt_text": item.prompt_text,
                    "image_refs": list(item.image_refs),
                    "highest_bloom": item.highest_bloom.label,
                    "gold_nodes": len(item.gold.nodes),
                    "gold_edges": len(item.gold.edges),
                }
            )
        return out

    def item_detail(self, item_id: str, include_gold: bool, authorized: bool) -> dict:
        item = self.item_or_404(item_id)
        out = {
            "item_id": item.item_id,
            "prompt_text": item.prompt_text,
            "image_refs": list(item.image_refs),
            "rubric_text": item.rubric_text,
            "highest_bloom": item.highest_bloom.label,
            "ontology": ontology_to_obj(item.ontology),
            "scoring": item.scoring.to_obj(),
        }
        if include_gold:
            if not authorized:
                raise ApiError(401, "gold graph requires authorization")
            out["gold"] = srg_to_obj(item.gold)
        return out

    def score(self, item_id: str, payload: dict) -> dict:
        item = self.item_or_404(item_id)
        g = self.parse_graph(payload.get("student"), item)
        return similarity(g, item.gold, item.ontology, item.scoring).to_obj()

    def feedback(self, item_id: str, payload: dict) -> dict:
        item = self.item_or_404(item_id)
        g = self.parse_graph(payload.get("student"), item)
        canvas = payload.get("canvas") or list(_DEFAULT_CANVAS)
        if not (isinstance(canvas, list) and len(canvas) == 2 and all(isinstance(v, int) and v > 0 for v in canvas)):
            raise ApiError(400, "canvas must be [width, height] in positive pixels")
        b = similarity(g, item.gold, item.ontology, item.scoring)
        defs = deficiencies(g, item.gold, b.alignment, item.ontology)
        hs = hints(defs, item.phi, limit=HINT_LIMIT_DEFAULT)
        report = feedback_report(b, defs, hs, gs=g, go=item.gold)
        overlay = render_overlay(hs, (canvas[0], canvas[1]))
        return {
            "breakdown": b.to_obj(),
            "report": report.to_obj(),
            "report_text": report.to_text(),
            "overlay": [op.to_obj() for op in overlay],
        }

    def create_session(self, payload: dict) -> dict:
        item = self.item_or_404(str(payload.get("item_id")))
        g = self.parse_graph(payload.get("student"), item)
        session = Session(
            session_id=uuid.uuid4().hex,
            item_id=item.item_id,
            current=g,
            t_max=int(payload.get("t_max") or self.t_max),
        )
        state = self._advance(session, item, g, first=True)
        with self._sessions_lock:
            self.sessions[session.session_id] = session
        self._journal_write({"event": "session_created", "session_id": session.session_id, "item_id": item.item_id})
        return state

    def _advance(self, session: Session, item: ItemSpec, g: Srg, first: bool = False) -> dict:
        b = similarity(g, item.gold, item.ontology, item.scoring)
        hs = self._hints_payload(b, g, item)
        session.current = g
        session.iterations.append(LoopIteration(session.t, g, b, tuple(hs)))
        if b.s >= item.scoring.tau:
            session.terminated_by = LoopTermination.THRESHOLD_MET
        elif session.t >= session.t_max:
            session.terminated_by = LoopTermination.MAX_ITERATIONS
        session.updated = time.time()
        self._journal_write(
            {
                "event": "session_step",
                "session_id": session.session_id,
                "t": session.t,
                "s": b.s,
                "band": b.band.value,
                "terminated": session.terminated,
            }
        )
        return {
            "session_id": session.session_id,
            "item_id": session.item_id,
            "t": session.t,
            "t_max": session.t_max,
            "breakdown": b.to_obj(),
            "hints": [h.to_obj() for h in hs],
            "terminated": session.terminated,
            "terminated_by": session.terminated_by.value if session.terminated_by else None,
        }

    def step_session(self, sid: str, payload: dict) -> dict:
        session = self.session_or_404(sid)
        item = self.item_or_404(session.item_id)
        g = self.parse_graph(payload.get("student"), item)
        with session.lock:
            if session.terminated:
                raise ApiError(
                    409,
                    f"session is terminated ({session.terminated_by.value}); current t={session.t}",
                )
            # Optimistic concurrency: a client claims the iteration index it is
            # creating. Concurrent claims of the same index have one winner.
            expected = payload.get("iteration")
            if expected is not None and expected != session.t + 1:
                raise ApiError(409, f"stale iteration {expected}; next is {session.t + 1}")
            session.t += 1
            return self._advance(session, item, g)

    def session_trace(self, sid: str) -> dict:
        return self.session_or_404(sid).trace().to_obj()


class _Handler(BaseHTTPRequestHandler):
    engine: Engine = None  # injected by make_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, obj):
        body = json.dumps(obj).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        token = self.engine.token
        if not token:
            return False
        header = self.headers.get("Authorization", "")
        return header == f"Bearer {token}"

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length <= 0:
            raise ApiError(400, "request body required")
        if length > 5_000_000:
            raise ApiError(413, "request body too large")
        try:
            return json.loads(self.rfile.read(length))
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"invalid JSON body: {exc}") from exc

    def _serve_static(self, path: str):
        root = self.engine.static_dir
        if root is None:
            raise ApiError(404, "no static bundle configured")
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            raise ApiError(404, f"no such file {rel!r}")
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if parts[:2] == ["api", "items"] and len(parts) == 2:
                self._send_json(200, self.engine.list_items())
            elif parts[:2] == ["api", "items"] and len(parts) == 3:
                include_gold = parse_qs(url.query).get("include_gold", ["false"])[0] == "true"
                self._send_json(200, self.engine.item_detail(parts[2], include_gold, self._authorized()))
            elif parts[:2] == ["api", "sessions"] and len(parts) == 4 and parts[3] == "trace":
                self._send_json(200, self.engine.session_trace(parts[2]))
            elif parts[:1] == ["api"]:
                raise ApiError(404, f"no such route {url.path}")
            else:
                self._serve_static(url.path)
        except ApiError as exc:
            self._send_json(exc.status, {"error": exc.message})
        except Exception as exc:  # pragma: no cover - defensive
            self._send_json(500, {"error": f"internal error: {exc}"})

    def do_POST(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            body = self._read_body()
            if parts[:2] == ["api", "items"] and len(parts) == 4 and parts[3] == "score":
                self._send_json(200, self.engine.score(parts[2], body))
            elif parts[:2] == ["api", "items"] and len(parts) == 4 and parts[3] == "feedback":
                self._send_json(200, self.engine.feedback(parts[2], body))
            elif parts == ["api", "sessions"]:
                self._send_json(200, self.engine.create_session(body))
            elif parts[:2] == ["api", "sessions"] and len(parts) == 4 and parts[3] == "step":
                self._send_json(200, self.engine.step_session(parts[2], body))
            else:
                raise ApiError(404, f"no such route {url.path}")
        except ApiError as exc:
            self._send_json(exc.status, {"error": exc.message})
        except Exception as exc:  # pragma: no cover - defensive
            self._send_json(500, {"error": f"internal error: {exc}"})


def make_server(engine: Engine, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"engine": engine})
    return ThreadingHTTPServer((host, port), handler)


def serve(
    items: list[ItemSpec],
    host: str = "127.0.0.1",
    port: int = 8765,
    token_env: str = "SKETCHEVAL_SERVICE_TOKEN",
    static_dir: Path | None = None,
    journal: Path | None = None,
):
    engine = Engine(
        items,
        token=os.environ.get(token_env) or None,
        static_dir=static_dir,
        journal=journal,
    )
    server = make_server(engine, host, port)
    print(f"serving {len(items)} items on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

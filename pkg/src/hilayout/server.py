"""HTTP service for interactive scene editing.

Endpoints:
  POST /sessions                 create a session from requirement + size
  GET  /sessions/{id}/scene      current scene (JSON mirror + document text)
  POST /sessions/{id}/edits      apply a language edit, re-solve
  POST /sessions/{id}/undo       restore the previous snapshot
  GET  /healthz                  liveness
  GET  /...                      static UI assets when configured

Sessions are in-memory; mutations on one session are serialized by a
per-session lock, and solves run on a small bounded worker pool off the
accept path.  Every 200/201 scene response is feasible; infeasible or
unrepairable edits return 422 with the validation report.
"""

from __future__ import annotations

import json
import mimetypes
import os
import re
import secrets
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import hierarchy_io
from .hierarchy_io import HierarchyIoError, Unrepairable
from .layout_solver import Infeasible, TooManyAreas
from .llm_client import ExhaustedRetries, ProviderError
from .pipeline import PipelineOptions, edit_scene, pose_deltas, synthesize
from .scene_model import SceneLayout

HISTORY_LIMIT = 50
WORKERS = 2
QUEUE_SLOTS = 8
QUEUE_TIMEOUT = 30.0


@dataclass
class Session:
    id: str
    layout: SceneLayout
    source_doc: str
    history: list[SceneLayout] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self):
        self.history.append(self.layout)
        if len(self.history) > HISTORY_LIMIT:
            self.history.pop(0)


class ApiError(Exception):
    def __init__(self, status: int, payload: dict):
        self.status = status
        self.payload = payload
        super().__init__(payload.get("error", "api error"))


def layout_to_json(layout: SceneLayout) -> dict:
    h = layout.hierarchy
    areas = []
    for area in h.areas:
        pose = layout.area_poses.get(area.id)
        areas.append({
            "id": area.id,
            "text": area.text,
            "size": list(area.size),
            "anchor": area.anchor_object,
            "center": list(pose.center) if pose else None,
            "facing": pose.facing if pose else None,
        })
    objects = []
    for area in h.areas:
        for oid in area.members:
            obj = h.objects[oid]
            pose = layout.object_poses.get(oid)
            if pose is None:
                continue
            objects.append({
                "id": oid,
                "text": obj.text,
                "category": obj.category,
                "size": list(obj.size),
                "asset": obj.asset,
                "area": area.id,
                "center": list(pose.center),
                "theta": pose.theta,
                "provenance": layout.provenance.get(oid),
            })
    report = layout.report
    return {
        "room": {"text": h.root.text, "size": list(h.root.size)},
        "areas": areas,
        "objects": objects,
        "relations": [
            {"from": e.from_id, "to": e.to_id, "text": e.text}
            for e in h.relations if e.text
        ],
        "report": {
            "feasible": report.feasible,
            "objective": report.objective,
            "max_overlap": report.max_overlap,
            "max_oob": report.max_oob,
            "walls": report.wall_assignment,
        } if report else None,
    }


class SceneService:
    """Session store plus the solve worker pool."""

    def __init__(self, options: PipelineOptions):
        self.options = options
        self.sessions: dict[str, Session] = {}
        self.sessions_lock = threading.Lock()
        self.pool = ThreadPoolExecutor(max_workers=WORKERS)
        self.queue_slots = threading.BoundedSemaphore(QUEUE_SLOTS)

    def _run_job(self, fn):
        if not self.queue_slots.acquire(timeout=QUEUE_TIMEOUT):
            raise ApiError(503, {"error": "solver queue full"})
        try:
            return self.pool.submit(fn).result()
        finally:
            self.queue_slots.release()

    def _wrap_pipeline_errors(self, fn):
        try:
            return self._run_job(fn)
        except (Unrepairable, Infeasible, TooManyAreas) as exc:
            report = getattr(exc, "report", None)
            payload = {"error": type(exc).__name__, "detail": str(exc)}
            if report is not None and hasattr(report, "errors"):
                payload["validation"] = {
                    "errors": list(getattr(report, "errors", [])),
                    "repairs": list(getattr(report, "repairs", [])),
                    "dropped": list(getattr(report, "dropped", [])),
                }
            raise ApiError(422, payload) from exc
        except HierarchyIoError as exc:
            raise ApiError(
                422,
                {"error": type(exc).__name__, "detail": str(exc),
                 "validation": {"errors": exc.report.errors, "repairs": exc.report.repairs,
                                "dropped": exc.report.dropped}},
            ) from exc
        except (ProviderError, ExhaustedRetries) as exc:
            raise ApiError(502, {"error": type(exc).__name__, "detail": str(exc)}) from exc

    def create_session(self, requirement: str, size) -> Session:
        result = self._wrap_pipeline_errors(
            lambda: synthesize(requirement, (float(size[0]), float(size[1])), self.options)
        )
        session = Session(
            id=secrets.token_hex(8),
            layout=result.layout,
            source_doc=hierarchy_io.serialize(result.layout).text,
        )
        with self.sessions_lock:
            self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self.sessions_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise ApiError(404, {"error": "unknown session"})
        return session

    def apply_edit(self, session_id: str, instruction: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            previous = session.layout
            result = self._wrap_pipeline_errors(
                lambda: edit_scene(previous, instruction, self.options)
            )
            session.snapshot()
            session.layout = result.layout
            deltas = pose_deltas(previous, result.layout)
            return self.scene_payload(session, deltas)

    def undo(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            if not session.history:
                raise ApiError(409, {"error": "nothing to undo"})
            current = session.layout
            session.layout = session.history.pop()
            return self.scene_payload(session, pose_deltas(current, session.layout))

    def scene_payload(self, session: Session, deltas=None) -> dict:
        return {
            "id": session.id,
            "scene": layout_to_json(session.layout),
            "document": hierarchy_io.serialize(session.layout).text,
            "deltas": deltas,
            "undo_depth": len(session.history),
        }


class Handler(BaseHTTPRequestHandler):
    service: SceneService = None
    static_dir: str | None = None

    # Silence per-request stderr logging.
    def log_message(self, fmt, *args):
        pass

    def _send_json(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, status: int, text: str, content_type="text/plain; charset=utf-8"):
        body = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length).decode("utf-8") if length else "{}"
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ApiError(400, {"error": f"invalid JSON body: {exc}"}) from exc

    def _wants_document(self) -> bool:
        accept = self.headers.get("Accept", "")
        return "text/plain" in accept and "application/json" not in accept

    def do_GET(self):
        try:
            if self.path == "/healthz":
                self._send_json(200, {"status": "ok"})
                return
            match = re.fullmatch(r"/sessions/([0-9a-f]+)/scene", self.path)
            if match:
                session = self.service.get(match.group(1))
                with session.lock:
                    if self._wants_document():
                        self._send_text(200, hierarchy_io.serialize(session.layout).text)
                    else:
                        self._send_json(200, self.service.scene_payload(session))
                return
            if self.static_dir:
                self._serve_static()
                return
            raise ApiError(404, {"error": "not found"})
        except ApiError as exc:
            self._send_json(exc.status, exc.payload)

    def do_POST(self):
        try:
            if self.path == "/sessions":
                body = self._read_body()
                requirement = body.get("requirement", "")
                size = body.get("size", [4.0, 4.0])
                if not requirement or len(size) != 2:
                    raise ApiError(400, {"error": "need requirement and size [w, d]"})
                session = self.service.create_session(requirement, size)
                self._send_json(201, self.service.scene_payload(session))
                return
            match = re.fullmatch(r"/sessions/([0-9a-f]+)/edits", self.path)
            if match:
                body = self._read_body()
                instruction = body.get("instruction", "")
                if not instruction:
                    raise ApiError(400, {"error": "need instruction"})
                self._send_json(200, self.service.apply_edit(match.group(1), instruction))
                return
            match = re.fullmatch(r"/sessions/([0-9a-f]+)/undo", self.path)
            if match:
                self._send_json(200, self.service.undo(match.group(1)))
                return
            raise ApiError(404, {"error": "not found"})
        except ApiError as exc:
            self._send_json(exc.status, exc.payload)

    def _serve_static(self):
        path = self.path.split("?")[0]
        if path == "/":
            path = "/index.html"
        full = os.path.normpath(os.path.join(self.static_dir, path.lstrip("/")))
        if not full.startswith(os.path.abspath(self.static_dir)) or not os.path.isfile(full):
            raise ApiError(404, {"error": "not found"})
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            body = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(port: int, options: PipelineOptions, static_dir=None) -> ThreadingHTTPServer:
    service = SceneService(options)
    handler = type("BoundHandler", (Handler,), {
        "service": service,
        "static_dir": os.path.abspath(static_dir) if static_dir else None,
    })
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.service = service
    return server


def snapshot_sessions(service: SceneService, directory) -> list[str]:
    """Write every session's current layout to <dir>/<id>.hilayout."""
    os.makedirs(directory, exist_ok=True)
    written = []
    with service.sessions_lock:
        sessions = list(service.sessions.values())
    for session in sessions:
        path = os.path.join(directory, f"{session.id}.hilayout")
        with session.lock, open(path, "w", encoding="utf-8") as fh:
            fh.write(hierarchy_io.serialize(session.layout).text)
        written.append(path)
    return written


def run_server(port: int, options: PipelineOptions, static_dir=None, snapshot_dir=None):
    server = make_server(port, options, static_dir)
    host, actual_port = server.server_address
    print(f"hilayout server listening on http://{host}:{actual_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    finally:
        if snapshot_dir:
            for path in snapshot_sessions(server.service, snapshot_dir):
                print(f"snapshotted {path}")

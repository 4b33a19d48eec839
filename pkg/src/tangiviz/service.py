"""HTTP service exposing sessions, frame ingestion, events, and snapshots.

Built on the standard library's threading HTTP server. Requests for one
session are serialized through a per-session lock (the ordered mailbox);
distinct sessions proceed in parallel. All JSON is snake_case; every non-2xx
response body is a single {code, message} error object.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import chart_model, session as session_mod, template_scanner
from .chart_model import CalibrationConfig, InvalidCalibration
from .raster import UnsupportedImage, png_bytes, read_png
from .session import (
    BadEvent,
    Flow1,
    Flow2,
    Flow3,
    IllegalTransition,
    SessionState,
    SnapshotStore,
    StorageFailure,
    dispatch,
    save_snapshot,
    scan_image_map,
)
from .vision import DetectConfig, detect_markers, preprocess

logger = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message

    @property
    def status(self) -> int:
        return {
            "bad_request": 400,
            "not_found": 404,
            "illegal_transition": 409,
            "storage_failure": 500,
        }[self.code]

    def to_json_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


@dataclass
class _SessionRuntime:
    state: SessionState
    store: SnapshotStore
    lock: threading.RLock = field(default_factory=threading.RLock)
    scan_images: dict[str, np.ndarray] = field(default_factory=dict)


def _state_summary(state: SessionState, extra: dict | None = None) -> dict:
    cur = state.current
    flow = {Flow1: "flow1", Flow2: "flow2", Flow3: "flow3"}.get(type(cur), "home")
    phase = cur.phase if isinstance(cur, Flow2) else None
    chart = None
    if isinstance(cur, Flow1):
        chart = cur.chart
    elif isinstance(cur, Flow2):
        chart = cur.chart
    summary = {
        "session_id": state.session_id,
        "flow": flow,
        "phase": phase,
        "chart": chart.to_json_dict() if chart is not None else None,
        "saved_flag": state.saved_flag,
    }
    if isinstance(cur, Flow3):
        summary["snapshots"] = [s.to_json_dict() for s in cur.snapshots]
    if extra:
        summary.update(extra)
    return summary


class ServiceApp:
    """Transport-independent application core behind the HTTP handler."""

    def __init__(
        self,
        store_root: str | Path,
        calib: CalibrationConfig | None = None,
        detect_config: DetectConfig | None = None,
    ) -> None:
        self.store_root = Path(store_root)
        self.store_root.mkdir(parents=True, exist_ok=True)
        self.default_calib = calib or chart_model.default_calibration()
        self.detect_config = detect_config or DetectConfig()
        self._sessions: dict[str, _SessionRuntime] = {}
        self._registry_lock = threading.Lock()

    # -- session plumbing --------------------------------------------------

    def _session(self, session_id: str) -> _SessionRuntime:
        with self._registry_lock:
            runtime = self._sessions.get(session_id)
        if runtime is None:
            raise ApiError("not_found", f"unknown session {session_id}")
        return runtime

    def create_session(self, body: bytes) -> dict:
        calib = self.default_calib
        if body.strip():
            try:
                doc = json.loads(body)
            except json.JSONDecodeError as exc:
                raise ApiError("bad_request", f"invalid JSON body: {exc}") from exc
            if doc:
                try:
                    calib = CalibrationConfig.from_json_dict(doc)
                except InvalidCalibration as exc:
                    raise ApiError("bad_request", str(exc)) from exc
        state = session_mod.new_session(calib)
        store = SnapshotStore(self.store_root / state.session_id)
        runtime = _SessionRuntime(state=state, store=store)
        with self._registry_lock:
            self._sessions[state.session_id] = runtime
        return {"session_id": state.session_id}

    # -- frames --------------------------------------------------------------

    def post_frame(self, session_id: str, body: bytes) -> dict:
        runtime = self._session(session_id)
        try:
            raw = read_png(body)
        except UnsupportedImage as exc:
            raise ApiError("bad_request", f"invalid PNG frame: {exc}") from exc
        calib = runtime.state.calib
        try:
            frame = preprocess(raw, flip_h=calib.flip_h, flip_v=calib.flip_v)
        except UnsupportedImage as exc:
            raise ApiError("bad_request", str(exc)) from exc
        observations = detect_markers(frame, self.detect_config)
        with runtime.lock:
            try:
                runtime.state = dispatch(
                    runtime.state,
                    session_mod.FrameReceived(tuple(observations)),
                    store=runtime.store,
                )
            except IllegalTransition as exc:
                raise ApiError("illegal_transition", str(exc)) from exc
            return _state_summary(
                runtime.state,
                extra={"observations": [o.to_json_dict() for o in observations]},
            )

    # -- events ----------------------------------------------------------------

    def post_event(self, session_id: str, content_type: str, body: bytes) -> dict:
        runtime = self._session(session_id)
        if content_type.startswith("multipart/form-data"):
            fields, files = _parse_multipart(content_type, body)
            event_type = fields.get("type", "scan_captured")
            if event_type != "scan_captured":
                raise ApiError("bad_request", "multipart events must be scan_captured")
            return self._handle_scan(runtime, fields, files)
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ApiError("bad_request", f"invalid JSON event: {exc}") from exc
        if not isinstance(doc, dict) or "type" not in doc:
            raise ApiError("bad_request", "event object needs a 'type' field")
        return self._handle_json_event(runtime, doc)

    def _handle_scan(self, runtime: _SessionRuntime, fields: dict, files: dict) -> dict:
        png = files.get("image")
        if png is None:
            raise ApiError("bad_request", "scan_captured needs an 'image' PNG part")
        try:
            n_points = int(fields.get("n_points", template_scanner.MAX_POINTS))
        except ValueError as exc:
            raise ApiError("bad_request", "n_points must be an integer") from exc
        with runtime.lock:
            cur = runtime.state.current
            if not (isinstance(cur, Flow2) and cur.phase == "scanning"):
                raise ApiError(
                    "illegal_transition",
                    "scan_captured only valid in flow2.scanning",
                )
            try:
                raw = read_png(png)
                calib = runtime.state.calib
                frame = preprocess(raw, flip_h=calib.flip_h, flip_v=calib.flip_v)
                scan = template_scanner.scan_template(frame, cur.kind, n_points)
            except UnsupportedImage as exc:
                raise ApiError("bad_request", f"invalid scan image: {exc}") from exc
            except template_scanner.NoPageFound as exc:
                raise ApiError("bad_request", str(exc)) from exc
            except template_scanner.BadNPoints as exc:
                raise ApiError("bad_request", str(exc)) from exc
            scan = self._persist_scan(runtime, scan)
            try:
                runtime.state = dispatch(
                    runtime.state, session_mod.ScanCaptured(scan), store=runtime.store
                )
            except IllegalTransition as exc:
                raise ApiError("illegal_transition", str(exc)) from exc
            return _state_summary(runtime.state)

    def _persist_scan(self, runtime: _SessionRuntime, scan) -> object:
        """Write crops to the session store and attach file refs to the scan."""
        from dataclasses import replace as dc_replace

        stamp = uuid.uuid4().hex[:8]
        directory = runtime.store.directory

        def put(name: str, image: np.ndarray) -> str:
            filename = f"scan_{stamp}_{name}.png"
            (directory / filename).write_bytes(png_bytes(image))
            runtime.scan_images[filename] = image
            return filename

        title_ref = put("title", scan.title_image)
        label_refs = tuple(
            put(f"label_{i}", img) for i, img in enumerate(scan.label_images)
        )
        legend_refs = tuple(
            put(f"legend_{i}", img) for i, img in enumerate(scan.legend_images)
        )
        return dc_replace(
            scan, title_ref=title_ref, label_refs=label_refs, legend_refs=legend_refs
        )

    def _handle_json_event(self, runtime: _SessionRuntime, doc: dict) -> dict:
        event_type = doc["type"]
        try:
            if event_type == "select_flow":
                event = session_mod.SelectFlow(
                    flow=str(doc.get("flow", "")), kind=str(doc.get("kind", "bar"))
                )
            elif event_type == "axes_configured":
                event = session_mod.AxesConfigured(
                    n_points=int(doc["n_points"]), y_max=float(doc["y_max"])
                )
            elif event_type == "toggle_pause":
                event = session_mod.TogglePause()
            elif event_type == "save":
                event = session_mod.Save()
            elif event_type == "tap_color":
                event = session_mod.TapColor(
                    index=int(doc["index"]), color=str(doc["color"])
                )
            elif event_type == "back":
                event = session_mod.Back()
            else:
                raise ApiError("bad_request", f"unknown event type {event_type!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError("bad_request", f"malformed {event_type} event: {exc}") from exc

        with runtime.lock:
            extra = None
            try:
                if isinstance(event, session_mod.Save):
                    images = dict(runtime.scan_images)
                    cur = runtime.state.current
                    if isinstance(cur, Flow2) and cur.scan is not None:
                        images.update(scan_image_map(cur.scan))
                    runtime.state, snapshot = save_snapshot(
                        runtime.state, runtime.store, images=images
                    )
                    extra = {"snapshot_id": snapshot.snapshot_id}
                else:
                    runtime.state = dispatch(runtime.state, event, store=runtime.store)
            except IllegalTransition as exc:
                raise ApiError("illegal_transition", str(exc)) from exc
            except BadEvent as exc:
                raise ApiError("bad_request", str(exc)) from exc
            except StorageFailure as exc:
                raise ApiError("storage_failure", str(exc)) from exc
            return _state_summary(runtime.state, extra=extra)

    # -- reads -----------------------------------------------------------------

    def get_state(self, session_id: str) -> dict:
        runtime = self._session(session_id)
        with runtime.lock:
            return _state_summary(runtime.state)

    def get_snapshots(self, session_id: str) -> list[dict]:
        runtime = self._session(session_id)
        with runtime.lock:
            try:
                return [s.to_json_dict() for s in runtime.store.list()]
            except StorageFailure as exc:
                raise ApiError("storage_failure", str(exc)) from exc

    def get_snapshot_image(self, session_id: str, snapshot_id: str) -> bytes:
        runtime = self._session(session_id)
        with runtime.lock:
            data = runtime.store.image_bytes(snapshot_id)
        if data is None:
            raise ApiError("not_found", f"unknown snapshot {snapshot_id}")
        return data

    def get_scan_image(self, session_id: str, name: str) -> bytes:
        runtime = self._session(session_id)
        if not re.fullmatch(r"[A-Za-z0-9_.-]+\.png", name):
            raise ApiError("bad_request", "invalid image name")
        path = runtime.store.directory / name
        if not path.is_file():
            raise ApiError("not_found", f"unknown image {name}")
        return path.read_bytes()


def _parse_multipart(content_type: str, body: bytes) -> tuple[dict, dict]:
    """Minimal multipart/form-data parser: text fields + file parts."""
    match = re.search(r'boundary="?([^";]+)"?', content_type)
    if not match:
        raise ApiError("bad_request", "multipart body without boundary")
    boundary = match.group(1).encode()
    fields: dict[str, str] = {}
    files: dict[str, bytes] = {}
    for part in body.split(b"--" + boundary):
        part = part.strip(b"\r\n")
        if not part or part == b"--":
            continue
        if b"\r\n\r\n" not in part:
            continue
        header_blob, content = part.split(b"\r\n\r\n", 1)
        headers = header_blob.decode("utf-8", "replace")
        name_match = re.search(r'name="([^"]+)"', headers)
        if not name_match:
            continue
        name = name_match.group(1)
        if 'filename="' in headers:
            files[name] = content
        else:
            fields[name] = content.decode("utf-8", "replace")
    return fields, files


_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".json": "application/json",
    ".map": "application/json",
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "tangiviz"
    app: ServiceApp
    ui_dir: Path | None = None

    # route table built against (method, regex)
    def _respond_json(self, status: int, payload) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _respond_bytes(self, status: int, data: bytes, content_type: str) -> None:
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length", "0") or "0")
        return self.rfile.read(length) if length else b""

    def log_message(self, fmt: str, *args) -> None:  # quiet by default
        logger.debug("%s %s", self.address_string(), fmt % args)

    def do_OPTIONS(self) -> None:  # noqa: N802 (stdlib naming)
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self) -> None:  # noqa: N802
        try:
            body = self._body()
            if self.path == "/sessions":
                self._respond_json(201, self.app.create_session(body))
                return
            m = re.fullmatch(r"/sessions/([0-9a-f]+)/frames", self.path)
            if m:
                self._respond_json(200, self.app.post_frame(m.group(1), body))
                return
            m = re.fullmatch(r"/sessions/([0-9a-f]+)/events", self.path)
            if m:
                content_type = self.headers.get("Content-Type", "application/json")
                self._respond_json(
                    200, self.app.post_event(m.group(1), content_type, body)
                )
                return
            raise ApiError("not_found", f"no route for POST {self.path}")
        except ApiError as err:
            self._respond_json(err.status, err.to_json_dict())
        except Exception as exc:  # hard failures still produce an ApiError body
            logger.exception("unhandled error")
            self._respond_json(
                500, {"code": "storage_failure", "message": f"internal error: {exc}"}
            )

    def do_GET(self) -> None:  # noqa: N802
        try:
            m = re.fullmatch(r"/sessions/([0-9a-f]+)/state", self.path)
            if m:
                self._respond_json(200, self.app.get_state(m.group(1)))
                return
            m = re.fullmatch(r"/sessions/([0-9a-f]+)/snapshots", self.path)
            if m:
                self._respond_json(200, self.app.get_snapshots(m.group(1)))
                return
            m = re.fullmatch(r"/sessions/([0-9a-f]+)/snapshots/([0-9a-f]+)/image", self.path)
            if m:
                data = self.app.get_snapshot_image(m.group(1), m.group(2))
                self._respond_bytes(200, data, "image/png")
                return
            m = re.fullmatch(r"/sessions/([0-9a-f]+)/images/([^/]+)", self.path)
            if m:
                data = self.app.get_scan_image(m.group(1), m.group(2))
                self._respond_bytes(200, data, "image/png")
                return
            if self._serve_static():
                return
            raise ApiError("not_found", f"no route for GET {self.path}")
        except ApiError as err:
            self._respond_json(err.status, err.to_json_dict())
        except Exception as exc:
            logger.exception("unhandled error")
            self._respond_json(
                500, {"code": "storage_failure", "message": f"internal error: {exc}"}
            )

    def _serve_static(self) -> bool:
        if self.ui_dir is None:
            return False
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())):
            return False
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return False
        ctype = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
        self._respond_bytes(200, target.read_bytes(), ctype)
        return True


def make_server(
    port: int,
    store_root: str | Path,
    calib: CalibrationConfig | None = None,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Build a ready-to-run threading HTTP server bound to host:port."""
    app = ServiceApp(store_root=store_root, calib=calib)
    handler = type("BoundHandler", (_Handler,), {
        "app": app,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server

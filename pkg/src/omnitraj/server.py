"""Local HTTP service backing the browser drag UI.

Endpoints (all local, no auth; CORS open so a dev-served page can call in):

* ``GET  /erp``       the reference ERP image as PNG
* ``GET  /meta``      ``{"W": ..., "H": ..., "L": ...}``
* ``POST /estimate``  omnidrag/1 body -> omnitraj/1 response
* ``GET  /viewport``  ``?yaw&pitch&fov&size`` (degrees) -> PNG
* ``POST /export``    omnitraj/1 body -> persisted file, ``{"path": ...}``

State is one immutable reference image per process; requests never mutate
it, so the threading server needs no locks beyond the export counter.
"""

from __future__ import annotations

import io
import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

import numpy as np
from PIL import Image

from . import __version__
from .erp_ops import ViewportSpec, render_viewport
from .errors import DomainError, FormatError, ToolkitError
from .sme import estimate_trajectories, parse_drag_pair_document
from .sphere import FrameGeometry
from .tracking import dumps_trajectories, parse_trajectory_document

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


def _png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


class ServerState:
    """Immutable session data plus the export counter."""

    def __init__(self, image: np.ndarray, length: int, export_dir, ui_dir=None):
        if image.ndim != 3 or image.shape[2] != 3:
            raise DomainError(f"reference image must be (H, W, 3), got {image.shape}")
        self.image = image
        h, w = image.shape[:2]
        self.geometry = FrameGeometry(W=w, H=h, L=length)
        self.erp_png = _png_bytes(image)
        self.export_dir = Path(export_dir)
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self._export_lock = threading.Lock()
        self._export_count = 0

    def next_export_path(self) -> Path:
        with self._export_lock:
            self._export_count += 1
            n = self._export_count
        self.export_dir.mkdir(parents=True, exist_ok=True)
        return self.export_dir / f"export_{n:03d}.json"


def _response_meta():
    return {"tool": "omnitraj", "version": __version__, "seed": None, "parameters": {}}


class ToolkitHandler(BaseHTTPRequestHandler):
    # state is attached to the server instance by make_server()

    def log_message(self, fmt, *args):
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    # -- plumbing ----------------------------------------------------------

    def _send(self, code: int, content_type: str, body: bytes) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, doc) -> None:
        body = (json.dumps(doc, separators=(",", ":")) + "\n").encode("utf-8")
        self._send(code, "application/json", body)

    def _send_error_json(self, code: int, exc) -> None:
        doc = {"error": str(exc)}
        if isinstance(exc, FormatError):
            doc["code"] = exc.code
        self._send_json(code, doc)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length) if length else b""

    def _read_json_body(self):
        raw = self._read_body()
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError("bad-json", f"request body is not valid JSON ({exc})") from exc

    # -- routes ------------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        state: ServerState = self.server.state
        url = urlsplit(self.path)
        try:
            if url.path == "/erp":
                self._send(200, "image/png", state.erp_png)
            elif url.path == "/meta":
                g = state.geometry
                self._send_json(200, {"W": g.W, "H": g.H, "L": g.L})
            elif url.path == "/viewport":
                self._get_viewport(state, url)
            else:
                self._get_static(state, url)
        except (ToolkitError, ValueError) as exc:
            self._send_error_json(400, exc)

    def _get_viewport(self, state: ServerState, url) -> None:
        q = parse_qs(url.query)

        def angle(name, default):
            try:
                return math.radians(float(q[name][0])) if name in q else default
            except ValueError as exc:
                raise DomainError(f"query parameter {name!r} is not a number") from exc

        try:
            size = int(q["size"][0]) if "size" in q else 512
        except ValueError as exc:
            raise DomainError("query parameter 'size' is not an integer") from exc
        spec = ViewportSpec(
            yaw=angle("yaw", 0.0),
            pitch=angle("pitch", 0.0),
            fov=angle("fov", math.pi / 2),
            out_w=size,
            out_h=size,
        )
        self._send(200, "image/png", _png_bytes(render_viewport(state.image, spec)))

    def _get_static(self, state: ServerState, url) -> None:
        if state.ui_dir is None:
            self._send_json(404, {"error": f"no such endpoint {url.path!r}"})
            return
        rel = url.path.lstrip("/") or "index.html"
        target = (state.ui_dir / rel).resolve()
        if state.ui_dir not in target.parents and target != state.ui_dir:
            self._send_json(404, {"error": "path escapes UI directory"})
            return
        if not target.is_file():
            self._send_json(404, {"error": f"no such file {url.path!r}"})
            return
        ctype = _STATIC_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send(200, ctype, target.read_bytes())

    def do_POST(self):
        state: ServerState = self.server.state
        url = urlsplit(self.path)
        try:
            if url.path == "/estimate":
                self._post_estimate(state)
            elif url.path == "/export":
                self._post_export(state)
            else:
                self._send_json(404, {"error": f"no such endpoint {url.path!r}"})
        except (ToolkitError, ValueError) as exc:
            self._send_error_json(400, exc)

    def _post_estimate(self, state: ServerState) -> None:
        doc = self._read_json_body()
        pairs, g = parse_drag_pair_document(doc, "<request>")
        s = state.geometry
        if (g.W, g.H) != (s.W, s.H):
            raise FormatError(
                "geometry-mismatch",
                f"request geometry {g.W}x{g.H} differs from session image {s.W}x{s.H}",
            )
        length = g.L if g.L >= 2 else s.L
        tset = estimate_trajectories(pairs, FrameGeometry(s.W, s.H, length))
        body = dumps_trajectories(tset, _response_meta()).encode("utf-8")
        self._send(200, "application/json", body)

    def _post_export(self, state: ServerState) -> None:
        doc = self._read_json_body()
        tset = parse_trajectory_document(doc, "<request>")
        path = state.next_export_path()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_trajectories(tset, doc.get("meta")))
        self._send_json(200, {"path": str(path)})


def make_server(
    image: np.ndarray,
    length: int,
    host: str = "127.0.0.1",
    port: int = 0,
    export_dir="exports",
    ui_dir=None,
    verbose: bool = False,
) -> ThreadingHTTPServer:
    """Bind (but do not run) the service; port 0 picks a free port."""
    server = ThreadingHTTPServer((host, port), ToolkitHandler)
    server.daemon_threads = True
    server.state = ServerState(image, length, export_dir, ui_dir)
    server.verbose = verbose
    return server


def run_server(image, length, host, port, export_dir, ui_dir=None) -> None:
    server = make_server(image, length, host, port, export_dir, ui_dir, verbose=True)
    host_shown, port_shown = server.server_address[:2]
    print(f"serving on http://{host_shown}:{port_shown} (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

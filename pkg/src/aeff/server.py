"""HTTP facade over stepping sessions.

Stdlib-only: a threading HTTP server routing a small JSON API plus an
optional static bundle for the browser UI.  Error bodies always have the
shape ``{"error": {"kind", "message", "location"?}}``.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from . import __version__
from .session import SessionError, SessionStore

MAX_BODY = 1 << 20

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}

_PLACEHOLDER = """<!doctype html>
<meta charset="utf-8">
<title>aeff stepper</title>
<body style="font-family: system-ui; max-width: 40em; margin: 4em auto">
<h1>aeff stepping service</h1>
<p>The API is up, but no UI bundle is installed.
Start with <code>aeff serve --static DIR</code> to serve one.</p>
<p>API: <code>POST /api/sessions {"source": "..."}</code>,
then <code>/step</code>, <code>/interrupt</code>, <code>/undo</code>.</p>
</body>
"""


def make_server(port: int = 8765, static_dir: Optional[str] = None,
                host: str = "127.0.0.1", idle_timeout: float = 1800.0,
                history_limit: int = 1000) -> ThreadingHTTPServer:
    store = SessionStore(idle_timeout=idle_timeout,
                         history_limit=history_limit)
    static_root = Path(static_dir).resolve() if static_dir else None

    class Handler(_Handler):
        sessions = store
        static = static_root

    server = ThreadingHTTPServer((host, port), Handler)
    server.sessions = store
    return server


def serve(port: int = 8765, static_dir: Optional[str] = None,
          host: str = "127.0.0.1", **kwargs) -> None:
    """Run the stepping service until interrupted."""
    server = make_server(port, static_dir, host, **kwargs)
    bound = server.server_address[1]
    print(f"aeff stepping service on http://{host}:{bound}/")
    try:
        server.serve_forever()
    finally:
        server.server_close()


class _Handler(BaseHTTPRequestHandler):
    sessions: SessionStore
    static: Optional[Path]
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    # -- plumbing ------------------------------------------------------------

    def _json(self, code: int, obj) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, e: SessionError) -> None:
        err = {"kind": e.kind, "message": e.message}
        if e.location is not None:
            err["location"] = e.location
        self._json(e.status, {"error": err})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise SessionError("badRequest", "request body too large", 400)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            obj = json.loads(raw)
        except ValueError:
            raise SessionError("badRequest", "request body is not JSON", 400)
        if not isinstance(obj, dict):
            raise SessionError("badRequest", "expected a JSON object", 400)
        return obj

    # -- routing -------------------------------------------------------------

    def do_GET(self):
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/health":
                self._json(200, {"ok": True, "version": __version__})
                return
            if path.startswith("/api/sessions/"):
                sid = path[len("/api/sessions/"):].strip("/")
                session = self.sessions.get(sid)
                with session.lock:
                    session.touch()
                    self._json(200, {"state": session.state_view()})
                return
            if path.startswith("/api/"):
                raise SessionError("notFound", f"no route {path}", 404)
            self._static(path)
        except SessionError as e:
            self._error(e)

    def do_POST(self):
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/sessions":
                body = self._read_body()
                source = body.get("source")
                if not isinstance(source, str):
                    raise SessionError("badRequest",
                                       "expected {\"source\": string}", 400)
                session = self.sessions.create(source)
                with session.lock:
                    self._json(200, {"sessionId": session.id,
                                     "state": session.state_view()})
                return
            if path.startswith("/api/sessions/"):
                rest = path[len("/api/sessions/"):].strip("/")
                sid, _, action = rest.partition("/")
                session = self.sessions.get(sid)
                body = self._read_body()
                with session.lock:
                    session.touch()
                    if action == "step":
                        redex_id = body.get("redexId")
                        if not isinstance(redex_id, str):
                            raise SessionError(
                                "badRequest",
                                "expected {\"redexId\": string}", 400)
                        session.apply_step(redex_id)
                        self._json(200, {"state": session.state_view()})
                    elif action == "interrupt":
                        op = body.get("op")
                        payload = body.get("payload", "()")
                        if not isinstance(op, str) or not isinstance(payload, str):
                            raise SessionError(
                                "badRequest",
                                "expected {\"op\": string, \"payload\": string}",
                                400)
                        session.inject(op, payload)
                        self._json(200, {"state": session.state_view()})
                    elif action == "undo":
                        undone = session.undo()
                        self._json(200, {"state": session.state_view(),
                                         "undone": undone})
                    else:
                        raise SessionError("notFound",
                                           f"no action {action!r}", 404)
                return
            raise SessionError("notFound", f"no route {path}", 404)
        except SessionError as e:
            self._error(e)

    # -- static files ----------------------------------------------------------

    def _static(self, path: str) -> None:
        if self.static is None:
            body = _PLACEHOLDER.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/html; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static / rel).resolve()
        # keep resolution inside the bundle directory
        if not target.is_relative_to(self.static) or not target.is_file():
            raise SessionError("notFound", f"no file {path}", 404)
        body = target.read_bytes()
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

"""Reference transports for the session wire protocol.

Every message in either direction is one UTF-8 JSON object:
``{"v": 1, "type": str, "seq": int|null, "body": object}``.

Three bindings share one hub:
  * a newline-delimited JSON stream over a TCP socket (the reference
    full-duplex endpoint, used by headless clients and tests),
  * a WebSocket endpoint at ``/ws`` on the HTTP port (what browsers use),
  * an HTTP endpoint serving the catalog document and the static UI.

The hub serializes all state changes per session; an ingest's full
broadcast set is dispatched before the next message is processed.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import socketserver
import struct
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import RoleError, SomekoneError, UsageError
from .persistence import EventLogWriter
from .session import (
    Broadcast,
    FeedRole,
    MonitorRole,
    ProjectorRole,
    Session,
    SNAPSHOT_SCOPES,
)
from .tracking import EngagementEvent, EventKind

PROTOCOL_VERSION = 1

_SCOPE_MESSAGE_TYPE = {
    "user_profile": "profile_update",
    "user_queue": "queue_update",
    "user_datalog": "event_echo",
    "social_graph": "graph_update",
    "image_coengagement": "graph_update",
    "topic_coengagement": "graph_update",
    "tag_clouds": "graph_update",
}


def envelope(msg_type: str, body: dict, seq: int | None = None) -> str:
    return json.dumps(
        {"v": PROTOCOL_VERSION, "type": msg_type, "seq": seq, "body": body},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


class Connection:
    """One client connection as the hub sees it; transport-agnostic."""

    _counter = 0
    _counter_lock = threading.Lock()

    def __init__(self, send_text):
        with Connection._counter_lock:
            Connection._counter += 1
            self.conn_id = Connection._counter
        self._send_text = send_text
        self._send_lock = threading.Lock()
        self.role: FeedRole | MonitorRole | ProjectorRole | None = None
        self.open = True

    def send(self, msg_type: str, body: dict, seq: int | None = None) -> None:
        if not self.open:
            return
        try:
            with self._send_lock:
                self._send_text(envelope(msg_type, body, seq))
        except OSError:
            self.open = False


class SessionHub:
    """Routes wire messages into one session and fans broadcasts back out."""

    def __init__(self, session: Session, data_dir: str | Path | None = None):
        self.session = session
        self._lock = threading.RLock()
        self._connections: dict[int, Connection] = {}
        self._writer = (
            EventLogWriter(data_dir, session.session_id) if data_dir else None
        )

    # -- connection lifecycle --------------------------------------------------

    def attach(self, conn: Connection) -> None:
        with self._lock:
            self._connections[conn.conn_id] = conn

    def detach(self, conn: Connection) -> None:
        with self._lock:
            conn.open = False
            self._connections.pop(conn.conn_id, None)

    def close(self) -> None:
        if self._writer:
            self._writer.close()

    # -- message handling --------------------------------------------------------

    def handle_text(self, conn: Connection, text: str) -> None:
        try:
            msg = json.loads(text)
        except json.JSONDecodeError:
            conn.send("error", {"code": "usage", "message": "message is not JSON"})
            return
        if not isinstance(msg, dict) or msg.get("v") != PROTOCOL_VERSION:
            conn.send("error", {"code": "usage", "message": "bad protocol envelope"})
            return
        msg_type = msg.get("type")
        body = msg.get("body") or {}
        try:
            with self._lock:
                handler = {
                    "hello": self._on_hello,
                    "join": self._on_join,
                    "pair": self._on_pair,
                    "event": self._on_event,
                    "snapshot_request": self._on_snapshot_request,
                }.get(msg_type)
                if handler is None:
                    raise UsageError(f"unknown message type: {msg_type!r}")
                handler(conn, body)
        except SomekoneError as exc:
            conn.send("error", {"code": exc.code, "message": str(exc)})

    def _on_hello(self, conn: Connection, body: dict) -> None:
        client = body.get("client", "feed")
        if client == "projector":
            self.session.verify_admin(body.get("token", ""))
            conn.role = ProjectorRole()
        resume = body.get("resume")
        if resume and client in ("feed", "monitor"):
            # reconnect path: re-bind the dropped connection's role so the
            # client can resync with snapshot requests (classroom trust model;
            # real authentication is out of scope by design)
            user_id = str(resume)
            self.session.nickname(user_id)  # referential check
            conn.role = (
                FeedRole(user_id) if client == "feed" else MonitorRole(user_id)
            )
        welcome = {
            "session": self.session.session_id,
            "watermark": self.session.seq_watermark,
            "catalog_path": "/catalog.json",
            "score_max": self.session.config.weights.score_max,
            "queue_len": self.session.config.queue_len,
        }
        conn.send("welcome", welcome, seq=self.session.seq_watermark)
        if client == "projector":
            conn.send(
                "graph_update",
                self.session.graph_summary(),
                seq=self.session.seq_watermark,
            )

    def _on_join(self, conn: Connection, body: dict) -> None:
        if conn.role is not None:
            raise UsageError("connection already has a role")
        user_id, broadcasts = self.session.join(str(body.get("nickname", "")))
        conn.role = FeedRole(user_id)
        code = self.session.issue_pairing_code(user_id)
        conn.send(
            "joined",
            {
                "user": user_id,
                "nickname": self.session.nickname(user_id),
                "role": "feed",
                "pairing_code": code.code,
            },
            seq=self.session.seq_watermark,
        )
        self._dispatch(broadcasts)

    def _on_pair(self, conn: Connection, body: dict) -> None:
        if conn.role is not None:
            raise UsageError("connection already has a role")
        target, notices = self.session.pair(str(body.get("code", "")))
        conn.role = MonitorRole(target)
        # the consumed code is single-use; hand the feed device a fresh one
        fresh = self.session.issue_pairing_code(target)
        for notice in notices:
            notice.body["next_code"] = fresh.code
        conn.send(
            "joined",
            {
                "user": target,
                "nickname": self.session.nickname(target),
                "role": "monitor",
            },
            seq=self.session.seq_watermark,
        )
        self._dispatch(notices)
        # initial sync so the three tabs render without extra round trips
        for scope in ("user_datalog", "user_profile", "user_queue"):
            snap = self.session.snapshot(scope, target)
            conn.send(_SCOPE_MESSAGE_TYPE[scope], snap, seq=snap["watermark"])

    def _on_event(self, conn: Connection, body: dict) -> None:
        if not isinstance(conn.role, FeedRole):
            raise RoleError("only feed clients may emit events")
        user_id = conn.role.user_id
        try:
            kind = EventKind(body.get("kind"))
        except ValueError:
            raise UsageError(f"unknown event kind: {body.get('kind')!r}") from None
        t_ms = max(self.session.now_ms(), self.session.log.last_t_ms)
        draft = EngagementEvent(
            seq=0,
            user_id=user_id,
            image_id=body.get("image"),
            t_ms=t_ms,
            kind=kind,
            data=body.get("data") or {},
        )
        broadcasts = self.session.ingest(
            user_id,
            draft,
            graphs_for_projector=self._has_projector(),
            persist=self._writer.append if self._writer else None,
        )
        self._dispatch(broadcasts)

    def _on_snapshot_request(self, conn: Connection, body: dict) -> None:
        scope = body.get("scope")
        if scope not in SNAPSHOT_SCOPES:
            raise UsageError(f"unknown snapshot scope: {scope!r}")
        user_id = body.get("user")
        if isinstance(conn.role, FeedRole):
            if scope.startswith("user_"):
                user_id = conn.role.user_id  # feed clients see only themselves
            else:
                raise RoleError("feed clients may not request classroom graphs")
        elif isinstance(conn.role, MonitorRole):
            if not scope.startswith("user_") or (
                user_id not in (None, conn.role.target_user_id)
            ):
                raise RoleError("monitors see only their paired user")
            user_id = conn.role.target_user_id
        elif isinstance(conn.role, ProjectorRole):
            pass  # all scopes allowed
        else:
            raise RoleError("join or pair before requesting snapshots")
        snap = self.session.snapshot(scope, user_id)
        conn.send(_SCOPE_MESSAGE_TYPE[scope], snap, seq=snap["watermark"])

    # -- broadcast fan-out ----------------------------------------------------------

    def _has_projector(self) -> bool:
        return any(
            isinstance(c.role, ProjectorRole) for c in self._connections.values()
        )

    def _audience(self, audience: str) -> list[Connection]:
        out = []
        for conn in self._connections.values():
            role = conn.role
            if audience == "projectors" and isinstance(role, ProjectorRole):
                out.append(conn)
            elif audience.startswith("feed:") and isinstance(role, FeedRole):
                if role.user_id == audience.split(":", 1)[1]:
                    out.append(conn)
            elif audience.startswith("monitors:") and isinstance(role, MonitorRole):
                if role.target_user_id == audience.split(":", 1)[1]:
                    out.append(conn)
        return out

    def _dispatch(self, broadcasts: list[Broadcast]) -> None:
        watermark = self.session.seq_watermark
        for b in broadcasts:
            for conn in self._audience(b.audience):
                conn.send(b.type, b.body, seq=watermark)


# -- TCP (newline-delimited JSON) binding --------------------------------------------


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        hub: SessionHub = self.server.hub  # type: ignore[attr-defined]

        def send_text(text: str) -> None:
            self.wfile.write(text.encode("utf-8") + b"\n")
            self.wfile.flush()

        conn = Connection(send_text)
        hub.attach(conn)
        try:
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace").strip()
                if line:
                    hub.handle_text(conn, line)
        except (ConnectionError, OSError):
            pass
        finally:
            hub.detach(conn)


class WireServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, hub: SessionHub, host: str = "127.0.0.1", port: int = 0):
        self.hub = hub
        super().__init__((host, port), _LineHandler)

    def handle_error(self, request, client_address) -> None:
        pass  # connection teardown races are expected with daemon threads

    @property
    def port(self) -> int:
        return self.server_address[1]


# -- WebSocket framing (server side, text frames only) --------------------------------

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _ws_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(payload: str) -> bytes:
    data = payload.encode("utf-8")
    header = bytearray([0x81])  # FIN + text opcode
    n = len(data)
    if n < 126:
        header.append(n)
    elif n < 1 << 16:
        header.append(126)
        header += struct.pack(">H", n)
    else:
        header.append(127)
        header += struct.pack(">Q", n)
    return bytes(header) + data


def ws_read_frame(rfile) -> tuple[bool, int, bytes] | None:
    """Read one frame; returns (fin, opcode, payload) or None on EOF."""
    head = rfile.read(2)
    if len(head) < 2:
        return None
    fin = bool(head[0] & 0x80)
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", rfile.read(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", rfile.read(8))[0]
    mask = rfile.read(4) if masked else b""
    payload = rfile.read(length) if length else b""
    if masked and payload:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return fin, opcode, payload


# -- HTTP + WebSocket binding -----------------------------------------------------------

FALLBACK_INDEX = """<!doctype html>
<html><head><meta charset="utf-8"><title>Somekone</title></head>
<body><h1>Somekone engine</h1>
<p>The engine is running. No UI bundle is installed; point --ui at a build
of the web client, or connect over the wire protocol (TCP or /ws).</p>
</body></html>"""


class _HttpHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _hub(self) -> SessionHub:
        return self.server.hub  # type: ignore[attr-defined]

    def do_GET(self) -> None:  # noqa: N802 (stdlib naming)
        if self.path == "/ws":
            self._upgrade_websocket()
            return
        if self.path == "/catalog.json":
            body = self.server.catalog_bytes  # type: ignore[attr-defined]
            self._respond(HTTPStatus.OK, body, "application/json; charset=utf-8")
            return
        self._serve_static()

    def _respond(self, status: HTTPStatus, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _serve_static(self) -> None:
        ui_dir = self.server.ui_dir  # type: ignore[attr-defined]
        rel = self.path.lstrip("/") or "index.html"
        rel = rel.split("?", 1)[0]
        if ui_dir is None:
            if rel == "index.html":
                self._respond(
                    HTTPStatus.OK, FALLBACK_INDEX.encode(), "text/html; charset=utf-8"
                )
            else:
                self._respond(HTTPStatus.NOT_FOUND, b"not found", "text/plain")
            return
        target = (ui_dir / rel).resolve()
        if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
            self._respond(HTTPStatus.NOT_FOUND, b"not found", "text/plain")
            return
        content_types = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".json": "application/json; charset=utf-8",
            ".svg": "image/svg+xml",
            ".png": "image/png",
            ".jpg": "image/jpeg",
        }
        ctype = content_types.get(target.suffix, "application/octet-stream")
        self._respond(HTTPStatus.OK, target.read_bytes(), ctype)

    def _upgrade_websocket(self) -> None:
        key = self.headers.get("Sec-WebSocket-Key")
        if (
            self.headers.get("Upgrade", "").lower() != "websocket"
            or not key
        ):
            self._respond(HTTPStatus.BAD_REQUEST, b"websocket upgrade required", "text/plain")
            return
        self.send_response(HTTPStatus.SWITCHING_PROTOCOLS)
        self.send_header("Upgrade", "websocket")
        self.send_header("Connection", "Upgrade")
        self.send_header("Sec-WebSocket-Accept", _ws_accept_key(key))
        self.end_headers()
        self.close_connection = True

        hub = self._hub()
        sock: socket.socket = self.connection

        def send_text(text: str) -> None:
            sock.sendall(ws_encode_text(text))

        conn = Connection(send_text)
        hub.attach(conn)
        fragments: list[bytes] = []
        try:
            while True:
                frame = ws_read_frame(self.rfile)
                if frame is None:
                    break
                fin, opcode, payload = frame
                if opcode == 0x8:  # close
                    break
                if opcode == 0x9:  # ping -> pong
                    sock.sendall(bytes([0x8A, len(payload)]) + payload)
                    continue
                if opcode in (0x1, 0x0):
                    fragments.append(payload)
                    if not fin:
                        continue
                    text = b"".join(fragments).decode("utf-8", errors="replace")
                    fragments = []
                    if text.strip():
                        hub.handle_text(conn, text)
        except (ConnectionError, OSError):
            pass
        finally:
            hub.detach(conn)


class HttpServer(ThreadingHTTPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        hub: SessionHub,
        catalog_bytes: bytes,
        ui_dir: str | Path | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.hub = hub
        self.catalog_bytes = catalog_bytes
        self.ui_dir = Path(ui_dir) if ui_dir else None
        super().__init__((host, port), _HttpHandler)

    def handle_error(self, request, client_address) -> None:
        pass  # see WireServer.handle_error

    @property
    def port(self) -> int:
        return self.server_address[1]


class EngineService:
    """The `serve` runtime: one session behind a TCP and an HTTP endpoint."""

    def __init__(
        self,
        session: Session,
        catalog_bytes: bytes,
        port: int = 0,
        http_port: int | None = None,
        host: str = "127.0.0.1",
        data_dir: str | Path | None = None,
        ui_dir: str | Path | None = None,
    ):
        self.hub = SessionHub(session, data_dir=data_dir)
        self.wire = WireServer(self.hub, host=host, port=port)
        self.http = HttpServer(
            self.hub,
            catalog_bytes,
            ui_dir=ui_dir,
            host=host,
            port=http_port if http_port is not None else (port + 1 if port else 0),
        )
        self._threads: list[threading.Thread] = []

    def start(self) -> None:
        for server in (self.wire, self.http):
            thread = threading.Thread(target=server.serve_forever, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        for server in (self.wire, self.http):
            server.shutdown()
            server.server_close()
        self.hub.close()

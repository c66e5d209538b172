import base64
import hashlib
import json
import os
import socket
import time
import urllib.request

import pytest

from somekone.config import EngineConfig
from somekone.server import EngineService, envelope, ws_encode_text
from somekone.session import Session


@pytest.fixture()
def service(catalog, catalog_bytes, tmp_path):
    session = Session(catalog, EngineConfig(seed=13))
    svc = EngineService(session, catalog_bytes, port=0, data_dir=tmp_path)
    svc.start()
    yield svc
    svc.stop()


class WireClient:
    """Newline-delimited JSON client for the TCP endpoint."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.file = self.sock.makefile("r", encoding="utf-8")

    def send(self, msg_type, body):
        self.sock.sendall((envelope(msg_type, body) + "\n").encode())

    def recv(self):
        line = self.file.readline()
        assert line, "connection closed unexpectedly"
        return json.loads(line)

    def recv_until(self, msg_type, limit=20):
        for _ in range(limit):
            msg = self.recv()
            if msg["type"] == msg_type:
                return msg
        raise AssertionError(f"no {msg_type} message within {limit} messages")

    def drain(self, n):
        return [self.recv() for _ in range(n)]

    def close(self):
        self.sock.close()


def test_hello_welcome_contract(service):
    client = WireClient(service.wire.port)
    client.send("hello", {"client": "feed"})
    welcome = client.recv()
    assert welcome["type"] == "welcome"
    assert welcome["v"] == 1
    assert welcome["body"]["score_max"] == 10.0
    assert welcome["body"]["catalog_path"] == "/catalog.json"
    client.close()


def test_join_flow_and_initial_queue(service):
    client = WireClient(service.wire.port)
    client.send("hello", {"client": "feed"})
    client.recv()
    client.send("join", {"nickname": "jarmo"})
    joined = client.recv_until("joined")
    assert joined["body"]["user"] == "u1"
    assert len(joined["body"]["pairing_code"]) == 6
    queue = client.recv_until("queue_update")
    assert len(queue["body"]["items"]) == 5
    client.close()


def test_duplicate_nickname_error(service):
    a = WireClient(service.wire.port)
    a.send("hello", {"client": "feed"})
    a.recv()
    a.send("join", {"nickname": "jarmo"})
    a.recv_until("queue_update")
    b = WireClient(service.wire.port)
    b.send("hello", {"client": "feed"})
    b.recv()
    b.send("join", {"nickname": "jarmo"})
    err = b.recv_until("error")
    assert err["body"]["code"] == "join"
    a.close()
    b.close()


def test_event_roundtrip_updates_monitor(service):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    joined = feed.recv_until("joined")
    code = joined["body"]["pairing_code"]
    feed.recv_until("queue_update")

    monitor = WireClient(service.wire.port)
    monitor.send("hello", {"client": "monitor"})
    monitor.recv()
    monitor.send("pair", {"code": code})
    mjoined = monitor.recv_until("joined")
    assert mjoined["body"]["role"] == "monitor"
    assert mjoined["body"]["user"] == "u1"
    # initial sync: datalog, profile, queue
    monitor.recv_until("event_echo")
    monitor.recv_until("profile_update")
    monitor.recv_until("queue_update")

    # transparency notice lands on the feed device with a fresh code
    notice = feed.recv_until("joined")
    assert notice["body"]["monitoring_active"] is True
    assert notice["body"]["next_code"] != code

    feed.send("event", {"kind": "seen", "image": "img_001"})
    feed.send("event", {"kind": "like", "image": "img_001"})

    got = [monitor.recv() for _ in range(6)]
    types = [m["type"] for m in got]
    assert types.count("event_echo") == 2
    assert types.count("profile_update") == 2
    assert types.count("queue_update") == 2
    like_echo = [
        m for m in got
        if m["type"] == "event_echo" and m["body"]["events"][0]["kind"] == "like"
    ]
    assert like_echo and like_echo[0]["body"]["events"][0]["image"] == "img_001"
    profile = [m for m in got if m["type"] == "profile_update"][-1]
    assert profile["body"]["affinities"].get("musiikki", 0) > 0

    feed.close()
    monitor.close()


def test_monitor_cannot_emit_events(service):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    joined = feed.recv_until("joined")
    feed.recv_until("queue_update")

    monitor = WireClient(service.wire.port)
    monitor.send("hello", {"client": "monitor"})
    monitor.recv()
    monitor.send("pair", {"code": joined["body"]["pairing_code"]})
    monitor.recv_until("queue_update")
    monitor.send("event", {"kind": "like", "image": "img_001"})
    err = monitor.recv_until("error")
    assert err["body"]["code"] == "role"
    feed.close()
    monitor.close()


def test_pairing_code_single_use(service):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    code = feed.recv_until("joined")["body"]["pairing_code"]
    feed.recv_until("queue_update")

    first = WireClient(service.wire.port)
    first.send("hello", {"client": "monitor"})
    first.recv()
    first.send("pair", {"code": code})
    first.recv_until("joined")

    second = WireClient(service.wire.port)
    second.send("hello", {"client": "monitor"})
    second.recv()
    second.send("pair", {"code": code})
    err = second.recv_until("error")
    assert err["body"]["code"] == "auth"
    for c in (feed, first, second):
        c.close()


def test_projector_requires_admin_token(service):
    bad = WireClient(service.wire.port)
    bad.send("hello", {"client": "projector", "token": "wrong"})
    assert bad.recv_until("error")["body"]["code"] == "auth"
    bad.close()

    good = WireClient(service.wire.port)
    good.send("hello", {"client": "projector", "token": service.hub.session.admin_token})
    assert good.recv()["type"] == "welcome"
    assert good.recv()["type"] == "graph_update"
    good.close()


def test_projector_sees_graph_updates_on_events(service):
    projector = WireClient(service.wire.port)
    projector.send(
        "hello", {"client": "projector", "token": service.hub.session.admin_token}
    )
    projector.recv()
    projector.recv()  # initial graph

    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    joined = projector.recv_until("joined")
    assert joined["body"]["nickname"] == "jarmo"
    feed.recv_until("queue_update")
    feed.send("event", {"kind": "seen", "image": "img_001"})
    update = projector.recv_until("graph_update")
    assert "similarity" in update["body"]

    projector.send("snapshot_request", {"scope": "social_graph"})
    snap = projector.recv_until("graph_update")
    assert [n["id"] for n in snap["body"]["nodes"]] == ["u1"]
    feed.close()
    projector.close()


def test_monitor_scope_restriction(service):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    code = feed.recv_until("joined")["body"]["pairing_code"]
    feed.recv_until("queue_update")

    other = WireClient(service.wire.port)
    other.send("hello", {"client": "feed"})
    other.recv()
    other.send("join", {"nickname": "anna"})
    other.recv_until("queue_update")

    monitor = WireClient(service.wire.port)
    monitor.send("hello", {"client": "monitor"})
    monitor.recv()
    monitor.send("pair", {"code": code})
    monitor.recv_until("queue_update")
    monitor.send("snapshot_request", {"scope": "user_profile", "user": "u2"})
    err = monitor.recv_until("error")
    assert err["body"]["code"] == "role"
    monitor.send("snapshot_request", {"scope": "social_graph"})
    assert monitor.recv_until("error")["body"]["code"] == "role"
    for c in (feed, other, monitor):
        c.close()


def test_events_persisted_to_data_dir(service, tmp_path):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    feed.recv_until("queue_update")
    feed.send("event", {"kind": "seen", "image": "img_001"})
    feed.recv_until("queue_update")
    session_id = service.hub.session.session_id
    log_path = tmp_path / f"{session_id}.events.jsonl"
    assert log_path.exists()
    assert len(log_path.read_text().splitlines()) == 1
    feed.close()


def test_event_echo_carries_live_score(service):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    feed.recv_until("queue_update")
    feed.send("event", {"kind": "like", "image": "img_001"})
    echo = feed.recv_until("event_echo")
    assert echo["body"]["score"]["image"] == "img_001"
    assert echo["body"]["score"]["value"] == pytest.approx(2.0)
    assert echo["body"]["score_max"] == 10.0
    feed.close()


def test_reconnect_resume_rebinds_role(service):
    feed = WireClient(service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    user = feed.recv_until("joined")["body"]["user"]
    feed.recv_until("queue_update")
    feed.close()  # connection drops; roster entry survives

    again = WireClient(service.wire.port)
    again.send("hello", {"client": "feed", "resume": user})
    assert again.recv()["type"] == "welcome"
    again.send("snapshot_request", {"scope": "user_queue"})
    snap = again.recv_until("queue_update")
    assert snap["body"]["user"] == user
    again.send("event", {"kind": "seen", "image": "img_001"})
    assert again.recv_until("event_echo")["body"]["events"][0]["user"] == user
    again.close()


def test_http_serves_catalog(service, catalog_bytes):
    url = f"http://127.0.0.1:{service.http.port}/catalog.json"
    with urllib.request.urlopen(url, timeout=5) as resp:
        assert resp.status == 200
        assert resp.read() == catalog_bytes


def test_http_fallback_index(service):
    url = f"http://127.0.0.1:{service.http.port}/"
    with urllib.request.urlopen(url, timeout=5) as resp:
        assert b"Somekone" in resp.read()


class WsClient:
    """Minimal RFC6455 client: handshake + masked text frames."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET /ws HTTP/1.1\r\nHost: 127.0.0.1:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode())
        response = b""
        while b"\r\n\r\n" not in response:
            response += self.sock.recv(4096)
        assert b"101" in response.split(b"\r\n")[0]
        expected = base64.b64encode(
            hashlib.sha1((key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11").encode()).digest()
        ).decode()
        assert expected.encode() in response
        self.buffer = b""

    def send(self, msg_type, body):
        payload = envelope(msg_type, body).encode()
        mask = os.urandom(4)
        header = bytearray([0x81])
        n = len(payload)
        if n < 126:
            header.append(0x80 | n)
        else:
            header.append(0x80 | 126)
            header += n.to_bytes(2, "big")
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        self.sock.sendall(bytes(header) + mask + masked)

    def _read_exact(self, n):
        while len(self.buffer) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise AssertionError("websocket closed")
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    def recv(self):
        head = self._read_exact(2)
        length = head[1] & 0x7F
        if length == 126:
            length = int.from_bytes(self._read_exact(2), "big")
        elif length == 127:
            length = int.from_bytes(self._read_exact(8), "big")
        payload = self._read_exact(length)
        return json.loads(payload.decode())

    def close(self):
        self.sock.close()


def test_websocket_binding_full_flow(service):
    ws = WsClient(service.http.port)
    ws.send("hello", {"client": "feed"})
    assert ws.recv()["type"] == "welcome"
    ws.send("join", {"nickname": "ws_user"})
    joined = ws.recv()
    assert joined["type"] == "joined" and joined["body"]["user"] == "u1"
    queue = ws.recv()
    assert queue["type"] == "queue_update"
    ws.send("event", {"kind": "seen", "image": "img_001"})
    messages = [ws.recv() for _ in range(2)]
    assert {m["type"] for m in messages} == {"event_echo", "queue_update"}
    ws.close()


def test_ws_encode_lengths():
    small = ws_encode_text("x" * 10)
    assert small[1] == 10
    big = ws_encode_text("x" * 300)
    assert big[1] == 126
    assert int.from_bytes(big[2:4], "big") == 300

"""Engine + UI bundle on one machine: serving, pairing, immediacy.

These run only when frontend/dist exists (built via `npm run build` in
frontend/). The primary suite stays green without it.
"""

import time
import urllib.request
from pathlib import Path

import pytest

from somekone.config import EngineConfig
from somekone.server import EngineService
from somekone.session import Session

from test_server import WireClient, WsClient

DIST = Path(__file__).resolve().parent.parent / "frontend" / "dist"

pytestmark = pytest.mark.skipif(
    not (DIST / "index.html").exists(),
    reason="frontend bundle not built (cd frontend && npm run build)",
)


@pytest.fixture()
def ui_service(catalog, catalog_bytes):
    session = Session(catalog, EngineConfig(seed=99))
    svc = EngineService(session, catalog_bytes, port=0, ui_dir=DIST)
    svc.start()
    yield svc
    svc.stop()


def _get(port, path):
    with urllib.request.urlopen(f"http://127.0.0.1:{port}{path}", timeout=5) as resp:
        return resp.status, resp.read()


def test_ui_bundle_served(ui_service):
    status, body = _get(ui_service.http.port, "/")
    assert status == 200 and b"somekone" in body.lower()
    status, body = _get(ui_service.http.port, "/js/main.js")
    assert status == 200 and b"pickRole" in body
    status, _ = _get(ui_service.http.port, "/catalog.json")
    assert status == 200


def test_path_traversal_blocked(ui_service):
    import http.client

    conn = http.client.HTTPConnection("127.0.0.1", ui_service.http.port, timeout=5)
    conn.request("GET", "/../pyproject.toml")
    resp = conn.getresponse()
    assert resp.status == 404
    conn.close()


def test_paired_immediacy_like_within_one_second(ui_service):
    feed = WsClient(ui_service.http.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "jarmo"})
    joined = feed.recv()
    code = joined["body"]["pairing_code"]
    feed.recv()  # initial queue

    monitor = WsClient(ui_service.http.port)
    monitor.send("hello", {"client": "monitor"})
    monitor.recv()
    monitor.send("pair", {"code": code})
    for _ in range(4):  # joined + three initial snapshots
        monitor.recv()
    feed.recv()  # transparency notice

    started = time.monotonic()
    feed.send("event", {"kind": "like", "image": "img_001"})
    echo = monitor.recv()
    elapsed = time.monotonic() - started
    assert echo["type"] == "event_echo"
    assert echo["body"]["events"][0]["kind"] == "like"
    assert elapsed < 1.0, f"monitor echo took {elapsed:.3f}s"
    feed.close()
    monitor.close()


def test_monitor_meter_shows_ten_of_ten_from_wire(ui_service):
    feed = WireClient(ui_service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "anna"})
    code = feed.recv_until("joined")["body"]["pairing_code"]
    feed.recv_until("queue_update")

    monitor = WireClient(ui_service.wire.port)
    monitor.send("hello", {"client": "monitor"})
    monitor.recv()
    monitor.send("pair", {"code": code})
    monitor.recv_until("queue_update")

    burst = [
        {"kind": "seen", "image": "img_001"},
        {"kind": "dwell_end", "image": "img_001", "data": {"duration_ms": 12_000}},
        {"kind": "share", "image": "img_001", "data": {"scope": "friends"}},
        {"kind": "comment", "image": "img_001", "data": {"length_chars": 40}},
        {"kind": "follow", "image": "img_001", "data": {"creator": "c_aino"}},
        {"kind": "emoji_reaction", "image": "img_001", "data": {"emoji": "heart_eyes"}},
    ]
    last_score = None
    for body in burst:
        feed.send("event", body)
        echo = monitor.recv_until("event_echo")
        last_score = echo["body"]
        monitor.recv_until("queue_update")
    # the displayed meter value is exactly the payload value over score_max
    assert last_score["score"]["value"] == 10.0
    assert last_score["score_max"] == 10.0
    feed.close()
    monitor.close()


def test_projector_rerenders_after_profile_change(ui_service):
    projector = WireClient(ui_service.wire.port)
    projector.send(
        "hello",
        {"client": "projector", "token": ui_service.hub.session.admin_token},
    )
    projector.recv()
    projector.recv()  # initial graph push

    feed = WireClient(ui_service.wire.port)
    feed.send("hello", {"client": "feed"})
    feed.recv()
    feed.send("join", {"nickname": "kid"})
    feed.recv_until("queue_update")
    projector.recv_until("joined")

    feed.send("event", {"kind": "like", "image": "img_001"})
    update = projector.recv_until("graph_update")
    assert "similarity" in update["body"]
    projector.send("snapshot_request", {"scope": "social_graph"})
    layout = projector.recv_until("graph_update")
    assert any(n["id"] == "u1" for n in layout["body"]["nodes"])
    feed.close()
    projector.close()

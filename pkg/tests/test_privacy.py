"""Local-only guarantees: the engine never reaches out, and persistence
touches nothing outside its configured directory."""

import re
from pathlib import Path

import somekone


SRC = Path(somekone.__file__).parent

# APIs that would open an outbound connection from engine code
OUTBOUND_PATTERNS = [
    r"\burllib\.request\b",
    r"^\s*(import|from)\s+requests\b",
    r"\bhttp\.client\b",
    r"\bcreate_connection\b",
    r"\bsocket\.connect\b",
    r"\.connect\(\(",
]


def engine_sources():
    return sorted(SRC.glob("*.py"))


def test_no_outbound_connection_apis_in_engine():
    offenders = []
    for path in engine_sources():
        text = path.read_text(encoding="utf-8")
        for pattern in OUTBOUND_PATTERNS:
            if re.search(pattern, text, flags=re.MULTILINE):
                offenders.append((path.name, pattern))
    assert offenders == [], f"outbound networking found: {offenders}"


def test_server_only_binds_listeners():
    text = (SRC / "server.py").read_text(encoding="utf-8")
    # listeners are fine; dialing out is not
    assert "socketserver" in text
    assert "create_connection" not in text


def test_persistence_confined_to_given_directory(tmp_path, catalog, config, monkeypatch):
    from somekone import tracking
    from somekone.persistence import EventLogWriter
    from somekone.session import Session

    outside = tmp_path / "outside"
    outside.mkdir()
    data = tmp_path / "data"
    monkeypatch.chdir(outside)

    session = Session(catalog, config)
    user, _ = session.join("kid")
    with EventLogWriter(data, session.session_id) as writer:
        session.ingest(user, tracking.seen(user, "img_001", 1), persist=writer.append)

    assert list(outside.iterdir()) == []
    assert len(list(data.iterdir())) == 1


def test_recommender_never_touches_content_fields():
    text = (SRC / "recommender.py").read_text(encoding="utf-8")
    for field in ("content_uri", ".title", "uri"):
        assert field not in text, f"recommender reads content field {field!r}"

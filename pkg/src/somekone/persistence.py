"""Durable local storage and deterministic export/replay.

The export document is the golden-file mechanism for the whole engine:
re-deriving from (config, catalog digest, log) reproduces the embedded
derived snapshot byte for byte.  Serialization is canonical JSON (sorted
keys, shortest round-trip floats, newline-terminated) so golden files are
stable across platforms.
"""

from __future__ import annotations

import json
import os
import warnings
from pathlib import Path
from typing import Iterable

from .catalog import Catalog
from .config import EngineConfig
from .errors import PersistenceError, ReplayError
from .session import Session
from .tracking import ActionLog, EngagementEvent

FORMAT_VERSION = 1
EXPORT_SUFFIX = ".somekone.json"
LOG_SUFFIX = ".events.jsonl"


def canonical_json(obj) -> str:
    """Sorted keys, minimal separators, shortest round-trip floats, one
    trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


class EventLogWriter:
    """Single appender for one session's log file.

    Each event is flushed and fsynced before the ingest acknowledges, so a
    crash never loses acknowledged data.
    """

    def __init__(self, directory: str | Path, session_id: str):
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
            self.path = directory / f"{session_id}{LOG_SUFFIX}"
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise PersistenceError(f"cannot open event log: {exc}") from exc

    def append(self, event: EngagementEvent) -> None:
        try:
            self._fh.write(event.to_line() + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"event append failed: {exc}") from exc

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def read_event_log(source: str | Path | bytes) -> list[EngagementEvent]:
    """Parse a JSON-lines log.  A corrupt trailing partial line is dropped
    with a warning (the documented crash-recovery rule); corruption anywhere
    else is an error."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = text.split("\n")
    trailing_partial = lines and lines[-1] != ""
    if not trailing_partial:
        lines = lines[:-1]
    events: list[EngagementEvent] = []
    for i, line in enumerate(lines):
        if not line:
            continue
        is_last = i == len(lines) - 1
        try:
            events.append(EngagementEvent.from_line(line))
        except Exception as exc:
            if is_last and trailing_partial:
                warnings.warn(
                    f"dropping corrupt trailing log line: {exc}", stacklevel=2
                )
                break
            raise ReplayError(f"corrupt log line {i + 1}: {exc}") from exc
    return events


def _user_order(user_ids: Iterable[str]) -> list[str]:
    """Join order for engine-assigned ids (u1, u2, ..., u10 sorts numerically)."""

    def key(uid: str):
        suffix = uid[1:]
        return (0, int(suffix)) if uid[:1] == "u" and suffix.isdigit() else (1, uid)

    return sorted(set(user_ids), key=key)


def replay(
    config: EngineConfig,
    catalog: Catalog,
    events: Iterable[EngagementEvent],
    roster: dict[str, str] | None = None,
) -> Session:
    """Rebuild a session by re-ingesting a recorded event stream.

    The derived state comes out identical to the live session that produced
    the log, because every ingest is deterministic given (config, catalog,
    event order).  Seq gaps or reordered timestamps abort with the seq named.

    ``roster`` maps user ids to nicknames (from an export document).  Without
    it, users are inferred from the log and nicknamed by their id.
    """
    events = list(events)
    session = Session(catalog, config)
    if roster is None:
        roster = {uid: uid for uid in (ev.user_id for ev in events)}
    for uid in _user_order(roster):
        assigned, _ = session.join(roster[uid])
        if assigned != uid:
            raise ReplayError(
                f"roster ids must be dense engine ids (u1..uN): got {uid!r}"
            )
    expected_seq = 1
    for ev in events:
        if ev.seq != expected_seq:
            raise ReplayError(f"seq gap at {ev.seq}: expected {expected_seq}")
        try:
            session.ingest(
                ev.user_id,
                EngagementEvent(0, ev.user_id, ev.image_id, ev.t_ms, ev.kind, ev.data),
                graphs_for_projector=False,
            )
        except Exception as exc:
            raise ReplayError(f"replay failed at seq {ev.seq}: {exc}") from exc
        expected_seq += 1
    return session


def export(session: Session) -> str:
    """Canonical export document for the session at its current watermark."""
    doc = {
        "format_version": FORMAT_VERSION,
        "session": session.session_id,
        "config": session.config.to_document(),
        "catalog_digest": session.catalog.digest,
        "roster": {u: session.roster[u] for u in sorted(session.roster)},
        "log": [json.loads(ev.to_line()) for ev in session.log],
        "derived": session.derived_snapshot(),
    }
    return canonical_json(doc)


def write_export(session: Session, path: str | Path) -> Path:
    path = Path(path)
    if not str(path).endswith(EXPORT_SUFFIX):
        path = path.with_name(path.name + EXPORT_SUFFIX)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(export(session), encoding="utf-8")
    except OSError as exc:
        raise PersistenceError(f"cannot write export: {exc}") from exc
    return path


def load_export(source: str | Path | bytes) -> dict:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReplayError(f"export is not valid JSON: {exc}") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise ReplayError(f"unsupported format_version: {doc.get('format_version')}")
    return doc


def first_difference(a, b, path="$") -> str | None:
    """JSON-pointer-ish path of the first mismatch between two documents."""
    if type(a) is not type(b):
        return path
    if isinstance(a, dict):
        for key in sorted(set(a) | set(b)):
            if key not in a or key not in b:
                return f"{path}.{key}"
            diff = first_difference(a[key], b[key], f"{path}.{key}")
            if diff:
                return diff
        return None
    if isinstance(a, list):
        if len(a) != len(b):
            return f"{path}.length"
        for i, (x, y) in enumerate(zip(a, b)):
            diff = first_difference(x, y, f"{path}[{i}]")
            if diff:
                return diff
        return None
    return None if a == b else path

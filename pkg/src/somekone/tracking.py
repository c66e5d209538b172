"""Engagement events and the append-only per-session action log.

Everything downstream (scores, profiles, graphs, recommendations) is a pure
function of this log.  Timestamps are milliseconds since session start, so
no wall-clock identifier ever enters the data and replays are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator

from .errors import OrderingError, ReferentialError, UsageError


class EventKind(str, Enum):
    SEEN = "seen"
    DWELL_END = "dwell_end"
    LIKE = "like"
    UNLIKE = "unlike"
    EMOJI = "emoji_reaction"
    COMMENT = "comment"
    FOLLOW = "follow"
    UNFOLLOW = "unfollow"
    SHARE = "share"
    INACTIVITY_START = "inactivity_start"
    INACTIVITY_END = "inactivity_end"


class Emoji(str, Enum):
    HEART_EYES = "heart_eyes"
    LAUGH = "laugh"
    SAD = "sad"
    ANGRY = "angry"
    WOW = "wow"


class ShareScope(str, Enum):
    PRIVATE = "private"
    FRIENDS = "friends"
    PUBLIC = "public"


# Kinds that happen to the whole session rather than to one image.
IMAGELESS_KINDS = frozenset({EventKind.INACTIVITY_START, EventKind.INACTIVITY_END})


@dataclass(frozen=True)
class EngagementEvent:
    """One tracked user action.

    ``seq`` is 0 on a draft event and assigned by the log at append time.
    ``data`` carries the kind-specific payload exactly as it goes on the
    wire (duration_ms, emoji, length_chars, creator, scope, ...).
    """

    seq: int
    user_id: str
    image_id: str | None
    t_ms: int
    kind: EventKind
    data: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.t_ms < 0:
            raise UsageError("timestamp must be non-negative")
        if self.kind in IMAGELESS_KINDS:
            if self.image_id is not None:
                raise UsageError(f"{self.kind.value} must not carry an image id")
        elif not self.image_id:
            raise UsageError(f"{self.kind.value} requires an image id")
        if self.kind is EventKind.DWELL_END:
            dur = self.data.get("duration_ms")
            if not isinstance(dur, int) or dur < 0:
                raise UsageError("dwell_end requires non-negative integer duration_ms")
        elif self.kind is EventKind.EMOJI:
            emoji = self.data.get("emoji")
            if emoji not in {e.value for e in Emoji}:
                raise UsageError(f"unknown emoji reaction: {emoji!r}")
        elif self.kind is EventKind.COMMENT:
            length = self.data.get("length_chars")
            if not isinstance(length, int) or length < 1:
                raise UsageError("comment requires positive integer length_chars")
            text = self.data.get("text")
            if text is not None and not isinstance(text, str):
                raise UsageError("comment text must be a string when present")
        elif self.kind in (EventKind.FOLLOW, EventKind.UNFOLLOW):
            creator = self.data.get("creator")
            if not isinstance(creator, str) or not creator:
                raise UsageError(f"{self.kind.value} requires a creator id")
        elif self.kind is EventKind.SHARE:
            scope = self.data.get("scope")
            if scope not in {s.value for s in ShareScope}:
                raise UsageError(f"unknown share scope: {scope!r}")

    def to_line(self) -> str:
        """Canonical one-line JSON serialization (the log file format)."""
        obj = {
            "seq": self.seq,
            "user": self.user_id,
            "image": self.image_id,
            "t": self.t_ms,
            "kind": self.kind.value,
            "data": self.data,
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_line(cls, line: str) -> "EngagementEvent":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed event line: {exc}") from exc
        try:
            ev = cls(
                seq=obj["seq"],
                user_id=obj["user"],
                image_id=obj["image"],
                t_ms=obj["t"],
                kind=EventKind(obj["kind"]),
                data=obj.get("data", {}),
            )
        except (KeyError, ValueError) as exc:
            raise UsageError(f"malformed event line: {exc}") from exc
        ev.validate()
        return ev


# -- draft-event factories (seq assigned later by the log) -------------------

def seen(user_id: str, image_id: str, t_ms: int) -> EngagementEvent:
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.SEEN)


def dwell_end(user_id: str, image_id: str, t_ms: int, duration_ms: int) -> EngagementEvent:
    return EngagementEvent(
        0, user_id, image_id, t_ms, EventKind.DWELL_END, {"duration_ms": duration_ms}
    )


def like(user_id: str, image_id: str, t_ms: int) -> EngagementEvent:
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.LIKE)


def unlike(user_id: str, image_id: str, t_ms: int) -> EngagementEvent:
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.UNLIKE)


def emoji_reaction(user_id: str, image_id: str, t_ms: int, emoji: Emoji | str) -> EngagementEvent:
    value = emoji.value if isinstance(emoji, Emoji) else emoji
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.EMOJI, {"emoji": value})


def comment(
    user_id: str, image_id: str, t_ms: int, length_chars: int, text: str | None = None
) -> EngagementEvent:
    data: dict = {"length_chars": length_chars}
    if text is not None:
        # Text is echoed to paired views only; no computation ever reads it.
        data["text"] = text
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.COMMENT, data)


def follow(user_id: str, image_id: str, t_ms: int, creator_id: str) -> EngagementEvent:
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.FOLLOW, {"creator": creator_id})


def unfollow(user_id: str, image_id: str, t_ms: int, creator_id: str) -> EngagementEvent:
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.UNFOLLOW, {"creator": creator_id})


def share(user_id: str, image_id: str, t_ms: int, scope: ShareScope | str) -> EngagementEvent:
    value = scope.value if isinstance(scope, ShareScope) else scope
    return EngagementEvent(0, user_id, image_id, t_ms, EventKind.SHARE, {"scope": value})


def inactivity_start(user_id: str, t_ms: int) -> EngagementEvent:
    return EngagementEvent(0, user_id, None, t_ms, EventKind.INACTIVITY_START)


def inactivity_end(user_id: str, t_ms: int) -> EngagementEvent:
    return EngagementEvent(0, user_id, None, t_ms, EventKind.INACTIVITY_END)


class ActionLog:
    """Append-only ordered event sequence for one session.

    seq values are strictly increasing from 1 with no gaps; timestamps are
    non-decreasing in seq order.  Existing events are never mutated.
    """

    def __init__(self, session_id: str):
        self.session_id = session_id
        self._events: list[EngagementEvent] = []

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[EngagementEvent]:
        return iter(self._events)

    @property
    def events(self) -> tuple[EngagementEvent, ...]:
        return tuple(self._events)

    @property
    def last_t_ms(self) -> int:
        return self._events[-1].t_ms if self._events else 0

    def append(self, draft: EngagementEvent) -> EngagementEvent:
        """Validate, assign the next seq, and append.  Returns the sealed event."""
        draft.validate()
        if self._events and draft.t_ms < self._events[-1].t_ms:
            raise OrderingError(
                f"timestamp regression: {draft.t_ms} < {self._events[-1].t_ms}"
            )
        sealed = replace(draft, seq=len(self._events) + 1)
        self._events.append(sealed)
        return sealed

    def append_event(self, draft: EngagementEvent) -> int:
        return self.append(draft).seq

    def events_for(self, user_id: str, image_id: str) -> list[EngagementEvent]:
        """All events matching both ids, in seq order.  Empty result is valid."""
        return [
            ev
            for ev in self._events
            if ev.user_id == user_id and ev.image_id == image_id
        ]

    def events_by_user(self, user_id: str) -> list[EngagementEvent]:
        return [ev for ev in self._events if ev.user_id == user_id]

    def dwell_total(self, user_id: str, image_id: str) -> int:
        """Sum of dwell durations (ms) for the pair.  Uncapped at this layer."""
        return sum(
            ev.data["duration_ms"]
            for ev in self.events_for(user_id, image_id)
            if ev.kind is EventKind.DWELL_END
        )

    def serialize(self) -> str:
        """One canonical JSON line per event; the replay input format."""
        return "".join(ev.to_line() + "\n" for ev in self._events)

    @classmethod
    def from_events(
        cls, session_id: str, events: Iterable[EngagementEvent]
    ) -> "ActionLog":
        """Rebuild a log from sealed events, verifying seq and time order."""
        log = cls(session_id)
        expected = 1
        for ev in events:
            if ev.seq != expected:
                raise OrderingError(f"seq gap: expected {expected}, got {ev.seq}")
            ev.validate()
            if log._events and ev.t_ms < log._events[-1].t_ms:
                raise OrderingError(f"timestamp regression at seq {ev.seq}")
            log._events.append(ev)
            expected += 1
        return log


def check_referential(event: EngagementEvent, catalog, roster: set[str] | None = None) -> None:
    """Optional id validation against an attached catalog/roster."""
    if roster is not None and event.user_id not in roster:
        raise ReferentialError(f"unknown user id: {event.user_id!r}")
    if event.image_id is not None and catalog is not None:
        catalog.image(event.image_id)

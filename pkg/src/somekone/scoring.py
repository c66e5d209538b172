"""Per-(user, image) engagement scores with an explainable breakdown.

A score is a pure function of the pair's event multiset: weighted
contributions per kind, summed and clamped to [0, score_max].  The
breakdown is kept pre-clamp so paired analytics views can show exactly
where the number came from.

Toggle-like kinds (like/unlike, follow/unfollow, share per scope, seen)
count once no matter how often they repeat, matching UI toggle semantics.
Dwell, comments, and emoji reactions accumulate; dwell seconds and the
comment length bonus are capped so passive scrolling alone cannot
saturate the scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from typing import Iterable, Mapping

from .errors import ConfigError, UsageError
from .tracking import ActionLog, EngagementEvent, EventKind, IMAGELESS_KINDS


@dataclass(frozen=True)
class WeightTable:
    seen: float = 0.2
    dwell_per_second: float = 0.1
    dwell_cap_seconds: float = 20.0
    like: float = 2.0
    unlike: float = -2.0
    emoji: float = 2.5
    comment_base: float = 1.0
    comment_per_char: float = 0.02
    comment_bonus_cap: float = 2.0
    follow: float = 3.0
    unfollow: float = -3.0
    share_private: float = 1.5
    share_friends: float = 2.5
    share_public: float = 3.5
    score_max: float = 10.0

    def validate(self) -> None:
        positive = (
            "seen", "dwell_per_second", "like", "emoji", "comment_base",
            "comment_per_char", "follow", "share_private", "share_friends",
            "share_public",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"weight {name} must be > 0")
        if self.unlike >= 0 or self.unfollow >= 0:
            raise ConfigError("unlike/unfollow weights must be negative")
        if self.score_max <= 0:
            raise ConfigError("score_max must be > 0")
        if self.dwell_cap_seconds <= 0 or self.comment_bonus_cap <= 0:
            raise ConfigError("caps must be > 0")


def default_weights() -> WeightTable:
    table = WeightTable()
    table.validate()
    return table


def weights_from_mapping(overrides: Mapping[str, float]) -> WeightTable:
    """Build a table from a config document, rejecting unknown keys."""
    known = {f.name for f in fields(WeightTable)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown weight fields {sorted(unknown)}")
    table = replace(WeightTable(), **dict(overrides))
    table.validate()
    return table


def load_weights(source: bytes | str) -> WeightTable:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"weight table is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("weight table must be a JSON object")
    return weights_from_mapping(doc)


@dataclass(frozen=True)
class EngagementScore:
    user_id: str
    image_id: str
    value: float
    breakdown: dict[str, float]

    def payload(self) -> dict:
        return {
            "user": self.user_id,
            "image": self.image_id,
            "value": self.value,
            "breakdown": {k: self.breakdown[k] for k in sorted(self.breakdown)},
        }


def _clamp(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def engagement_score(
    events: Iterable[EngagementEvent],
    weights: WeightTable,
    user_id: str | None = None,
    image_id: str | None = None,
) -> EngagementScore:
    """Score one (user, image) pair from its events.

    Order-independent: the result depends only on the event multiset.
    Mixed pairs in the input are a usage error.  For an empty event list
    the pair ids must be supplied explicitly.
    """
    events = list(events)
    for ev in events:
        if ev.kind in IMAGELESS_KINDS:
            raise UsageError("inactivity events carry no image and are never scored")
        if user_id is None:
            user_id, image_id = ev.user_id, ev.image_id
        elif (ev.user_id, ev.image_id) != (user_id, image_id):
            raise UsageError(
                f"mixed pairs: ({ev.user_id},{ev.image_id}) vs ({user_id},{image_id})"
            )
    if user_id is None or image_id is None:
        raise UsageError("empty event list needs explicit user_id and image_id")

    dwell_ms = 0
    comment_count = 0
    comment_chars = 0
    emoji_count = 0
    seen_any = False
    like_any = False
    unlike_any = False
    followed: set[str] = set()
    unfollowed: set[str] = set()
    share_scopes: set[str] = set()

    for ev in events:
        kind = ev.kind
        if kind is EventKind.SEEN:
            seen_any = True
        elif kind is EventKind.DWELL_END:
            dwell_ms += ev.data["duration_ms"]
        elif kind is EventKind.LIKE:
            like_any = True
        elif kind is EventKind.UNLIKE:
            unlike_any = True
        elif kind is EventKind.EMOJI:
            emoji_count += 1
        elif kind is EventKind.COMMENT:
            comment_count += 1
            comment_chars += ev.data["length_chars"]
        elif kind is EventKind.FOLLOW:
            followed.add(ev.data["creator"])
        elif kind is EventKind.UNFOLLOW:
            unfollowed.add(ev.data["creator"])
        elif kind is EventKind.SHARE:
            share_scopes.add(ev.data["scope"])

    breakdown: dict[str, float] = {}
    if seen_any:
        breakdown["seen"] = weights.seen
    if dwell_ms > 0:
        capped_seconds = min(dwell_ms / 1000.0, weights.dwell_cap_seconds)
        breakdown["dwell"] = weights.dwell_per_second * capped_seconds
    if like_any:
        breakdown["like"] = weights.like
    if unlike_any:
        breakdown["unlike"] = weights.unlike
    if emoji_count:
        breakdown["emoji"] = weights.emoji * emoji_count
    if comment_count:
        bonus = min(weights.comment_per_char * comment_chars, weights.comment_bonus_cap)
        breakdown["comment"] = weights.comment_base * comment_count + bonus
    if followed:
        breakdown["follow"] = weights.follow * len(followed)
    if unfollowed:
        breakdown["unfollow"] = weights.unfollow * len(unfollowed)
    scope_weights = {
        "private": weights.share_private,
        "friends": weights.share_friends,
        "public": weights.share_public,
    }
    for scope in sorted(share_scopes):
        breakdown[f"share_{scope}"] = scope_weights[scope]

    value = _clamp(sum(breakdown.values()), 0.0, weights.score_max)
    return EngagementScore(user_id, image_id, value, breakdown)


def all_scores(
    log: ActionLog, weights: WeightTable
) -> dict[tuple[str, str], EngagementScore]:
    """One score per (user, image) pair with at least one event."""
    grouped: dict[tuple[str, str], list[EngagementEvent]] = {}
    for ev in log:
        if ev.kind in IMAGELESS_KINDS:
            continue
        grouped.setdefault((ev.user_id, ev.image_id), []).append(ev)  # type: ignore[arg-type]
    return {
        pair: engagement_score(pair_events, weights)
        for pair, pair_events in grouped.items()
    }

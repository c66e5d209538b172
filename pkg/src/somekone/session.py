"""Live session state: roster, log, derived analytics, pairing, broadcasts.

All engagement data stays in this process (plus the local persistence
directory); there is no outbound path by construction.  Derived state is
kept exactly consistent with the log: everything readable at watermark W
is a pure function of events with seq <= W, so snapshots taken at the same
watermark are identical and replays reproduce a live session bit for bit.

Queue randomness is derived statelessly from (seed, user, watermark), so
recomputing a queue at the same watermark is idempotent no matter when or
how often it happens.
"""

from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass, field

from . import coengagement as coeng_mod
from . import recommender as rec_mod
from .catalog import Catalog
from .config import EngineConfig
from .errors import (
    AuthorizationError,
    JoinError,
    ReferentialError,
    UsageError,
)
from .graph_layout import init_layout, propagate_colors, run_layout
from .profiling import (
    Strategy,
    UserProfile,
    build_profile,
    similarity_edges,
)
from .recommender import RecommendationQueue
from .scoring import EngagementScore, engagement_score
from .tracking import ActionLog, EngagementEvent, EventKind

# Unambiguous alphabet: no 0/O, no 1/I.
PAIRING_ALPHABET = "ABCDEFGHJKLMNPQRSTUVWXYZ23456789"
PAIRING_CODE_LEN = 6

SNAPSHOT_SCOPES = (
    "user_profile",
    "user_queue",
    "user_datalog",
    "social_graph",
    "image_coengagement",
    "topic_coengagement",
    "tag_clouds",
)


def _derive_int(*parts: object) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class PairingCode:
    code: str
    target_user_id: str
    expires_at_ms: int
    consumed: bool = False


@dataclass(frozen=True)
class FeedRole:
    user_id: str


@dataclass(frozen=True)
class MonitorRole:
    target_user_id: str


@dataclass(frozen=True)
class ProjectorRole:
    pass


ClientRole = FeedRole | MonitorRole | ProjectorRole


@dataclass
class Broadcast:
    """One outbound message with its audience; the hub fans these out."""

    audience: str  # "feed:<user>", "monitors:<user>", or "projectors"
    type: str
    body: dict


class Session:
    """Single-session hub state with one logical writer.

    The transport layer serializes calls into this object; concurrent
    snapshot reads between ingests observe watermark-consistent state.
    """

    def __init__(self, catalog: Catalog, config: EngineConfig, clock=None):
        config.validate()
        self.catalog = catalog
        self.config = config
        self.session_id = "s" + hashlib.sha256(
            f"session|{config.seed}".encode()
        ).hexdigest()[:10]
        self.admin_token = hashlib.sha256(
            f"admin|{config.seed}".encode()
        ).hexdigest()[:16]
        self.log = ActionLog(self.session_id)
        self.roster: dict[str, str] = {}  # user_id -> nickname
        self.profiles: dict[str, UserProfile] = {}
        self.scores: dict[tuple[str, str], EngagementScore] = {}
        self.coeng_images = coeng_mod.CoEngagementGraph()
        self.seq_watermark = 0

        self._clock = clock or _MonotonicClock()
        self._pairing_rng = random.Random(_derive_int(config.seed, "pairing"))
        self._pairing_codes: dict[str, PairingCode] = {}
        self._pair_events: dict[tuple[str, str], list[EngagementEvent]] = {}
        self._scores_by_user: dict[str, dict[str, float]] = {}
        self._user_pair_contrib: dict[str, dict[tuple[str, str], float]] = {}
        self._seen: dict[str, set[str]] = {}
        self._seen_order: dict[str, list[str]] = {}
        self._liked_tags: dict[str, set[str]] = {}
        self._totals: dict[str, dict[str, int]] = {}
        self._served_strategy: dict[str, dict[str, Strategy]] = {}
        self._crossed: dict[str, set[str]] = {}
        self._queue_cache: dict[str, tuple[int, RecommendationQueue]] = {}
        self._sim_cache: tuple[int, list] | None = None
        self._topics_cache: tuple[int, coeng_mod.CoEngagementGraph] | None = None
        self._layout_cache: dict[str, tuple[int, dict]] = {}

    # -- clock ---------------------------------------------------------------

    def now_ms(self) -> int:
        return self._clock.now_ms()

    # -- roster --------------------------------------------------------------

    def join(self, nickname: str) -> tuple[str, list[Broadcast]]:
        """Add a feed user.  Nicknames are unique within the session."""
        nickname = nickname.strip()
        if not nickname:
            raise JoinError("nickname must be non-empty")
        if nickname in self.roster.values():
            raise JoinError(f"nickname {nickname!r} already taken")
        user_id = f"u{len(self.roster) + 1}"
        self.roster[user_id] = nickname
        self.profiles[user_id] = build_profile(
            user_id, {}, self.catalog,
            floor=self.config.weight_floor, random_share=self.config.epsilon,
        )
        self._scores_by_user[user_id] = {}
        self._user_pair_contrib[user_id] = {}
        self._liked_tags[user_id] = set()
        self._totals[user_id] = {}
        self._served_strategy[user_id] = {}
        self._crossed[user_id] = set()
        self._seen[user_id] = set()
        self._seen_order[user_id] = []
        self._sim_cache = None
        broadcasts = [
            Broadcast(
                "projectors",
                "joined",
                {"user": user_id, "nickname": nickname, "role": "feed"},
            ),
            Broadcast(
                f"feed:{user_id}",
                "queue_update",
                self.queue_for(user_id).payload(),
            ),
        ]
        return user_id, broadcasts

    def nickname(self, user_id: str) -> str:
        if user_id not in self.roster:
            raise ReferentialError(f"unknown user id: {user_id!r}")
        return self.roster[user_id]

    # -- pairing -------------------------------------------------------------

    def issue_pairing_code(self, target_user_id: str) -> PairingCode:
        if target_user_id not in self.roster:
            raise ReferentialError(f"unknown user id: {target_user_id!r}")
        code = "".join(
            PAIRING_ALPHABET[
                min(
                    int(self._pairing_rng.random() * len(PAIRING_ALPHABET)),
                    len(PAIRING_ALPHABET) - 1,
                )
            ]
            for _ in range(PAIRING_CODE_LEN)
        )
        pairing = PairingCode(
            code=code,
            target_user_id=target_user_id,
            expires_at_ms=self.now_ms() + self.config.pairing_ttl_seconds * 1000,
        )
        self._pairing_codes[code] = pairing
        return pairing

    def pair(self, code: str) -> tuple[str, list[Broadcast]]:
        """Consume a pairing code; returns the target user and the
        transparency notification for their feed client."""
        pairing = self._pairing_codes.get(code)
        if pairing is None:
            raise AuthorizationError("unknown pairing code")
        if pairing.consumed:
            raise AuthorizationError("pairing code already used")
        if self.now_ms() > pairing.expires_at_ms:
            raise AuthorizationError("pairing code expired")
        if pairing.target_user_id not in self.roster:
            raise AuthorizationError("pairing target left the session")
        self._pairing_codes[code] = PairingCode(
            pairing.code, pairing.target_user_id, pairing.expires_at_ms, consumed=True
        )
        target = pairing.target_user_id
        notice = Broadcast(
            f"feed:{target}",
            "joined",
            {"role": "monitor", "target": target, "monitoring_active": True},
        )
        return target, [notice]

    def verify_admin(self, token: str) -> None:
        if token != self.admin_token:
            raise AuthorizationError("bad admin token")

    # -- ingest --------------------------------------------------------------

    def ingest(
        self,
        user_id: str,
        draft: EngagementEvent,
        graphs_for_projector: bool = True,
        persist=None,
    ) -> list[Broadcast]:
        """Append one event and bring every derived view up to the new watermark.

        Returns the full broadcast set for this event; the caller must
        dispatch it before processing the next ingest for the session.
        """
        if user_id not in self.roster:
            raise ReferentialError(f"unknown user id: {user_id!r}")
        if draft.user_id != user_id:
            raise UsageError("event user does not match acting user")
        if draft.image_id is not None:
            self.catalog.image(draft.image_id)

        # On the first event about an image, read its source strategy off the
        # queue at the pre-append watermark.  Being watermark-pure keeps live
        # ingestion and replay in exact agreement.
        if draft.image_id is not None:
            self._record_served_strategy(user_id, draft.image_id)

        sealed = self.log.append(draft)
        if persist is not None:
            persist(sealed)
        self.seq_watermark = sealed.seq

        self._track(user_id, sealed)
        if sealed.image_id is not None:
            self._pair_events.setdefault((user_id, sealed.image_id), []).append(sealed)
            self._rescore_pair(user_id, sealed.image_id)
        else:
            self._rebuild_profile(user_id)
        self._sim_cache = None
        self._topics_cache = None
        self._layout_cache.clear()

        queue = self.queue_for(user_id)

        event_payload = _event_payload(sealed)
        # the pair's refreshed score rides along so paired views can render
        # the engagement meter without recomputing anything client-side
        score = (
            self.scores[(user_id, sealed.image_id)].payload()
            if sealed.image_id is not None
            else None
        )
        echo_body = {
            "events": [event_payload],
            "score": score,
            "score_max": self.config.weights.score_max,
        }
        profile_body = self.profiles[user_id].payload()
        queue_body = queue.payload()
        broadcasts = [
            Broadcast(f"feed:{user_id}", "event_echo", echo_body),
            Broadcast(f"feed:{user_id}", "queue_update", queue_body),
            Broadcast(f"monitors:{user_id}", "event_echo", echo_body),
            Broadcast(f"monitors:{user_id}", "profile_update", profile_body),
            Broadcast(f"monitors:{user_id}", "queue_update", queue_body),
        ]
        if graphs_for_projector:
            broadcasts.append(
                Broadcast("projectors", "graph_update", self.graph_summary())
            )
        return broadcasts

    def _record_served_strategy(self, user_id: str, image_id: str) -> None:
        served = self._served_strategy[user_id]
        if image_id in served:
            return
        for item in self.queue_for(user_id).items:
            if item.image_id == image_id:
                served[image_id] = item.source_strategy
                return

    def _track(self, user_id: str, ev: EngagementEvent) -> None:
        totals = self._totals[user_id]
        totals[ev.kind.value] = totals.get(ev.kind.value, 0) + 1
        if ev.kind is EventKind.SEEN and ev.image_id is not None:
            self._seen[user_id].add(ev.image_id)
            self._seen_order[user_id].append(ev.image_id)
        elif ev.kind is EventKind.LIKE and ev.image_id is not None:
            self._liked_tags[user_id].update(self.catalog.image(ev.image_id).tags)

    def _rescore_pair(self, user_id: str, image_id: str) -> None:
        events = self._pair_events.get((user_id, image_id), [])
        score = engagement_score(events, self.config.weights, user_id, image_id)
        self.scores[(user_id, image_id)] = score
        self._scores_by_user.setdefault(user_id, {})[image_id] = score.value
        self._update_user_coengagement(user_id)
        self._rebuild_profile(user_id)
        self._maybe_strategy_feedback(user_id, image_id, score)

    def _update_user_coengagement(self, user_id: str) -> None:
        old = self._user_pair_contrib.get(user_id) or {}
        new = coeng_mod.user_pair_contributions(
            self._scores_by_user.get(user_id, {}),
            self.config.engaged_threshold,
            self.config.weights.score_max,
        )
        graph = self.coeng_images
        for key in old.keys() | new.keys():
            delta = new.get(key, 0.0) - old.get(key, 0.0)
            if delta:
                graph.add_edge(key[0], key[1], delta)
        # drop edges that cancel to (near) zero so payloads stay clean
        for key in [k for k, w in graph.edges.items() if w <= 1e-12]:
            graph.remove_edge(*key)
        self._user_pair_contrib[user_id] = new

    def _rebuild_profile(self, user_id: str) -> None:
        user_scores = {
            img: self.scores[(user_id, img)]
            for img in self._scores_by_user.get(user_id, {})
        }
        prev = self.profiles.get(user_id)
        self.profiles[user_id] = build_profile(
            user_id,
            user_scores,
            self.catalog,
            totals_by_kind=self._totals[user_id],
            hit_rates=prev.hit_rates if prev else None,
            floor=self.config.weight_floor,
            random_share=self.config.epsilon,
        )

    def _maybe_strategy_feedback(
        self, user_id: str, image_id: str, score: EngagementScore
    ) -> None:
        if score.value < self.config.engaged_threshold:
            return
        if image_id in self._crossed[user_id]:
            return
        self._crossed[user_id].add(image_id)
        strategy = self._served_strategy[user_id].get(image_id)
        if strategy is None:
            return
        from .profiling import update_strategy_weights

        update_strategy_weights(
            self.profiles[user_id],
            (strategy, score.value),
            score_max=self.config.weights.score_max,
            alpha=self.config.ema_alpha,
            floor=self.config.weight_floor,
            random_share=self.config.epsilon,
        )

    # -- derived reads (all watermark-consistent) ------------------------------

    def queue_for(self, user_id: str) -> RecommendationQueue:
        """The user's upcoming queue at the current watermark (pure, cached)."""
        if user_id not in self.roster:
            raise ReferentialError(f"unknown user id: {user_id!r}")
        cached = self._queue_cache.get(user_id)
        if cached and cached[0] == self.seq_watermark:
            return cached[1]
        rng = random.Random(
            _derive_int(self.config.seed, "queue", user_id, self.seq_watermark)
        )
        window = self._seen_order[user_id][-self.config.recency_window :] if self.config.recency_window else []
        queue = rec_mod.next_queue(
            user_id,
            catalog=self.catalog,
            profiles=self.profiles,
            scores=self.scores,
            graph=self.coeng_images,
            seen=self._seen[user_id],
            recent_seen=set(window),
            rng=rng,
            liked_tags=self._liked_tags[user_id],
            n=self.config.queue_len,
            epsilon=self.config.epsilon,
            engaged_threshold=self.config.engaged_threshold,
            score_max=self.config.weights.score_max,
            neighbors=self.config.neighbors,
            pool_k=self.config.pool_k,
            popularity_weight=self.config.popularity_weight,
            recency_penalty=self.config.recency_penalty,
        )
        self._queue_cache[user_id] = (self.seq_watermark, queue)
        return queue

    def similarity(self) -> list:
        if self._sim_cache and self._sim_cache[0] == self.seq_watermark:
            return self._sim_cache[1]
        edges = similarity_edges(self.profiles, self.config.similarity_threshold)
        self._sim_cache = (self.seq_watermark, edges)
        return edges

    def coeng_topics(self) -> coeng_mod.CoEngagementGraph:
        if self._topics_cache and self._topics_cache[0] == self.seq_watermark:
            return self._topics_cache[1]
        topics = coeng_mod.topic_projection(self.coeng_images, self.catalog)
        self._topics_cache = (self.seq_watermark, topics)
        return topics

    def similarity_payload(self) -> dict:
        return {
            "nodes": sorted(self.roster),
            "edges": [
                {"a": e.user_a, "b": e.user_b, "w": e.weight}
                for e in sorted(self.similarity(), key=lambda e: (e.user_a, e.user_b))
            ],
        }

    def graph_summary(self) -> dict:
        return {
            "similarity": self.similarity_payload(),
            "coengagement_images": self.coeng_images.payload(),
            "coengagement_topics": self.coeng_topics().payload(),
        }

    def top_image_of(self, user_id: str) -> str | None:
        by_user = self._scores_by_user.get(user_id) or {}
        if not by_user:
            return None
        return sorted(by_user, key=lambda img: (-by_user[img], img))[0]

    def snapshot(self, scope: str, user_id: str | None = None) -> dict:
        """Consistent payload for one scope, stamped with the watermark."""
        if scope not in SNAPSHOT_SCOPES:
            raise UsageError(f"unknown snapshot scope: {scope!r}")
        if scope.startswith("user_"):
            if user_id is None:
                raise UsageError(f"scope {scope} requires a user id")
            if user_id not in self.roster:
                raise ReferentialError(f"unknown user id: {user_id!r}")
        if scope == "user_profile":
            body = self.profiles[user_id].payload()
        elif scope == "user_queue":
            body = self.queue_for(user_id).payload()
        elif scope == "user_datalog":
            body = {
                "user": user_id,
                "events": [
                    _event_payload(ev) for ev in self.log.events_by_user(user_id)
                ],
                "scores": {
                    img: self.scores[(user_id, img)].payload()
                    for img in sorted(self._scores_by_user.get(user_id, {}))
                },
                "score_max": self.config.weights.score_max,
            }
        elif scope == "social_graph":
            body = self._layout_payload(
                "social_graph",
                nodes=sorted(self.roster),
                edges=[
                    (e.user_a, e.user_b, e.weight) for e in self.similarity()
                ],
                labels=dict(self.roster),
                top_images={
                    u: self.top_image_of(u)
                    for u in self.roster
                    if self.top_image_of(u) is not None
                },
            )
        elif scope == "image_coengagement":
            graph = self.coeng_images
            body = self._layout_payload(
                "image_coengagement",
                nodes=sorted(graph.nodes),
                edges=[(a, b, w) for (a, b), w in sorted(graph.edges.items())],
                labels={
                    img: (self.catalog.image(img).title or img)
                    for img in graph.nodes
                },
                top_images={img: img for img in graph.nodes},
            )
        elif scope == "topic_coengagement":
            graph = self.coeng_topics()
            body = self._layout_payload(
                "topic_coengagement",
                nodes=sorted(graph.nodes),
                edges=[(a, b, w) for (a, b), w in sorted(graph.edges.items())],
                labels={tag: f"#{tag}" for tag in graph.nodes},
                top_images={},
            )
        else:  # tag_clouds
            body = {
                "users": [
                    {
                        "user": u,
                        "nickname": self.roster[u],
                        "top_tags": [
                            {"tag": t["tag"], "affinity": t["affinity"]}
                            for t in self.profiles[u].payload()["top_tags"]
                        ],
                    }
                    for u in sorted(self.roster)
                ]
            }
        return {"scope": scope, "watermark": self.seq_watermark, **body}

    def _layout_payload(self, scope, nodes, edges, labels, top_images) -> dict:
        cached = self._layout_cache.get(scope)
        if cached and cached[0] == self.seq_watermark:
            return cached[1]
        if not nodes:
            payload = {"nodes": [], "edges": [], "converged": True}
        else:
            state = init_layout(nodes, edges, seed=self.config.seed)
            state = run_layout(state)
            state = propagate_colors(state, self.config.color_iters)
            payload = state.payload(labels=labels, top_images=top_images)
        self._layout_cache[scope] = (self.seq_watermark, payload)
        return payload

    def derived_snapshot(self) -> dict:
        """Everything derived, at the current watermark (the export body)."""
        return {
            "watermark": self.seq_watermark,
            "profiles": {u: self.profiles[u].payload() for u in sorted(self.profiles)},
            "scores": [
                self.scores[pair].payload() for pair in sorted(self.scores)
            ],
            "similarity_edges": self.similarity_payload()["edges"],
            "coengagement_images": self.coeng_images.payload(),
            "coengagement_topics": self.coeng_topics().payload(),
            "queues": {u: self.queue_for(u).payload() for u in sorted(self.roster)},
        }


def _event_payload(ev: EngagementEvent) -> dict:
    return {
        "seq": ev.seq,
        "user": ev.user_id,
        "image": ev.image_id,
        "t": ev.t_ms,
        "kind": ev.kind.value,
        "data": dict(ev.data),
    }


class _MonotonicClock:
    def __init__(self) -> None:
        self._start = time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._start) * 1000)


class FixedClock:
    """Deterministic clock for tests and replay."""

    def __init__(self, t_ms: int = 0) -> None:
        self.t_ms = t_ms

    def advance(self, delta_ms: int) -> None:
        self.t_ms += delta_ms

    def now_ms(self) -> int:
        return self.t_ms


def create_session(
    catalog: Catalog, config: EngineConfig, clock=None
) -> tuple[Session, str]:
    """New empty session plus its admin token."""
    session = Session(catalog, config, clock=clock)
    return session, session.admin_token

"""Headless multi-agent simulation driving a session through ingest.

Agents are scripted personas: each step an agent takes the top item of its
current queue and reacts according to its propensities, with preferred-tag
images drawing the full high-engagement bundle.  Agents have no backdoor
into state; everything flows through the same ingest path as real clients,
so a simulation exercises the whole contract and its outputs replay
exactly.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from . import tracking
from .catalog import Catalog
from .config import EngineConfig
from .errors import ConfigError
from .persistence import canonical_json, export, write_export
from .session import Session, _derive_int
from .tracking import Emoji, ShareScope

EMOJI_CHOICES = tuple(Emoji)
SCOPE_CHOICES = tuple(ShareScope)

EVENT_SPACING_MS = 50


@dataclass(frozen=True)
class AgentPersona:
    persona_id: str
    preferred_tags: frozenset[str]
    propensities: dict[str, float]
    dwell_preferred_ms: int
    dwell_other_ms: int

    def validate(self, catalog: Catalog) -> None:
        vocabulary = set(catalog.tag_vocabulary)
        for tag in self.preferred_tags:
            if tag not in vocabulary:
                raise ConfigError(
                    f"persona {self.persona_id!r} prefers unknown tag {tag!r}"
                )
        for kind, p in self.propensities.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(
                    f"persona {self.persona_id!r} propensity {kind}={p} outside [0, 1]"
                )
        if self.dwell_preferred_ms < 0 or self.dwell_other_ms < 0:
            raise ConfigError("dwell means must be non-negative")


def load_personas(source: bytes | str | Path) -> list[AgentPersona]:
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"persona file is not valid JSON: {exc}") from exc
    entries = doc.get("personas") if isinstance(doc, dict) else None
    if not isinstance(entries, list) or not entries:
        raise ConfigError("persona file must contain a non-empty 'personas' array")
    personas = []
    for entry in entries:
        try:
            dwell = entry.get("dwell_ms", {})
            personas.append(
                AgentPersona(
                    persona_id=entry["id"],
                    preferred_tags=frozenset(entry["preferred_tags"]),
                    propensities=dict(entry.get("propensities", {})),
                    dwell_preferred_ms=int(dwell.get("preferred_mean", 8000)),
                    dwell_other_ms=int(dwell.get("other_mean", 800)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed persona entry: {exc}") from exc
    return personas


def _pick(rng: random.Random, options):
    return options[min(int(rng.random() * len(options)), len(options) - 1)]


def run_simulation(
    catalog: Catalog,
    config: EngineConfig,
    personas: list[AgentPersona],
    agents: int,
    steps: int,
    persist=None,
) -> Session:
    """Run ``agents`` scripted users for ``steps`` rounds; returns the session."""
    if agents < 1 or steps < 1:
        raise ConfigError("agents and steps must be >= 1")
    for persona in personas:
        persona.validate(catalog)
    session = Session(catalog, config)
    assigned: dict[str, AgentPersona] = {}
    for i in range(agents):
        user_id, _ = session.join(f"agent{i + 1:02d}")
        assigned[user_id] = personas[i % len(personas)]

    rng = random.Random(_derive_int(config.seed, "simulate"))
    t_ms = 0

    def emit(draft) -> None:
        session.ingest(
            draft.user_id, draft, graphs_for_projector=False, persist=persist
        )

    user_order = [f"u{i + 1}" for i in range(agents)]
    for _ in range(steps):
        for user_id in user_order:
            queue = session.queue_for(user_id)
            if not queue.items:
                continue
            image_id = queue.items[0].image_id
            record = catalog.image(image_id)
            persona = assigned[user_id]
            preferred = bool(record.tags & persona.preferred_tags)

            t_ms += EVENT_SPACING_MS
            emit(tracking.seen(user_id, image_id, t_ms))
            mean = persona.dwell_preferred_ms if preferred else persona.dwell_other_ms
            dwell = int(mean * (0.5 + rng.random()))
            t_ms += EVENT_SPACING_MS
            emit(tracking.dwell_end(user_id, image_id, t_ms, dwell))

            if preferred:
                p = persona.propensities
                if rng.random() < p.get("like", 0.0):
                    t_ms += EVENT_SPACING_MS
                    emit(tracking.like(user_id, image_id, t_ms))
                if rng.random() < p.get("emoji_reaction", 0.0):
                    t_ms += EVENT_SPACING_MS
                    emit(
                        tracking.emoji_reaction(
                            user_id, image_id, t_ms, _pick(rng, EMOJI_CHOICES)
                        )
                    )
                if rng.random() < p.get("comment", 0.0):
                    t_ms += EVENT_SPACING_MS
                    emit(
                        tracking.comment(
                            user_id, image_id, t_ms, 10 + int(rng.random() * 70)
                        )
                    )
                if rng.random() < p.get("follow", 0.0):
                    t_ms += EVENT_SPACING_MS
                    emit(tracking.follow(user_id, image_id, t_ms, record.creator_id))
                if rng.random() < p.get("share", 0.0):
                    t_ms += EVENT_SPACING_MS
                    emit(
                        tracking.share(
                            user_id, image_id, t_ms, _pick(rng, SCOPE_CHOICES)
                        )
                    )
    return session


def write_outputs(session: Session, out_dir: str | Path) -> dict[str, Path]:
    """Write the export, the three graphs, and their layout payloads."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    paths["export"] = write_export(session, out / "session")

    graphs = {
        "similarity": session.similarity_payload(),
        "coengagement_images": session.coeng_images.payload(),
        "coengagement_topics": session.coeng_topics().payload(),
    }
    for name, payload in graphs.items():
        path = out / f"{name}.graph.json"
        path.write_text(canonical_json(payload), encoding="utf-8")
        paths[name] = path

    layouts = {
        "social": session.snapshot("social_graph"),
        "images": session.snapshot("image_coengagement"),
        "topics": session.snapshot("topic_coengagement"),
    }
    for name, payload in layouts.items():
        path = out / f"{name}.layout.json"
        path.write_text(canonical_json(payload), encoding="utf-8")
        paths[name] = path
    return paths


__all__ = [
    "AgentPersona",
    "load_personas",
    "run_simulation",
    "write_outputs",
    "export",
]

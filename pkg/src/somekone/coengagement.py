"""Image co-engagement graph and its topic projection.

Two images are co-engaged when the same user scored both above the
engagement threshold within the session.  Edge weight accumulates
min(score_i, score_j) / score_max per such user, so a pair a user merely
glanced at binds far more weakly than a pair they loved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .catalog import Catalog
from .errors import UsageError
from .scoring import EngagementScore

DEFAULT_ENGAGED_THRESHOLD = 4.0


def _edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


@dataclass
class CoEngagementGraph:
    """Weighted undirected graph over image ids (or tag ids when projected)."""

    nodes: set[str] = field(default_factory=set)
    edges: dict[tuple[str, str], float] = field(default_factory=dict)
    _adjacency: dict[str, dict[str, float]] = field(default_factory=dict, repr=False)

    def add_edge(self, a: str, b: str, weight: float) -> None:
        if a == b:
            return
        key = _edge_key(a, b)
        total = self.edges.get(key, 0.0) + weight
        self.edges[key] = total
        self.nodes.add(a)
        self.nodes.add(b)
        self._adjacency.setdefault(a, {})[b] = total
        self._adjacency.setdefault(b, {})[a] = total

    def remove_edge(self, a: str, b: str) -> None:
        key = _edge_key(a, b)
        if key in self.edges:
            del self.edges[key]
            self._adjacency.get(a, {}).pop(b, None)
            self._adjacency.get(b, {}).pop(a, None)

    def weight(self, a: str, b: str) -> float:
        return self.edges.get(_edge_key(a, b), 0.0)

    def max_weight(self) -> float:
        return max(self.edges.values()) if self.edges else 0.0

    def neighbors(self, node: str) -> dict[str, float]:
        return dict(self._adjacency.get(node, {}))

    def payload(self) -> dict:
        """Shared graph wire format: {"nodes": [...], "edges": [{a,b,w}...]}."""
        return {
            "nodes": sorted(self.nodes),
            "edges": [
                {"a": a, "b": b, "w": self.edges[(a, b)]}
                for a, b in sorted(self.edges)
            ],
        }


def user_pair_contributions(
    image_scores: dict[str, float], threshold: float, score_max: float
) -> dict[tuple[str, str], float]:
    """One user's co-engagement contribution: min(s_i, s_j)/score_max per pair
    of images they scored at or above the threshold."""
    engaged = sorted(img for img, value in image_scores.items() if value >= threshold)
    contributions: dict[tuple[str, str], float] = {}
    for i, a in enumerate(engaged):
        for b in engaged[i + 1 :]:
            contributions[(a, b)] = (
                min(image_scores[a], image_scores[b]) / score_max
            )
    return contributions


def build_coengagement(
    scores: dict[tuple[str, str], EngagementScore],
    threshold: float = DEFAULT_ENGAGED_THRESHOLD,
    score_max: float = 10.0,
) -> CoEngagementGraph:
    """Aggregate every user's engaged-pair contributions into one graph."""
    if not 0.0 < threshold <= score_max:
        raise UsageError(f"threshold {threshold} outside (0, {score_max}]")
    per_user: dict[str, dict[str, float]] = {}
    for (user_id, image_id), score in scores.items():
        per_user.setdefault(user_id, {})[image_id] = score.value
    graph = CoEngagementGraph()
    for user_id in sorted(per_user):
        for (a, b), w in user_pair_contributions(
            per_user[user_id], threshold, score_max
        ).items():
            graph.add_edge(a, b, w)
    return graph


def topic_projection(graph: CoEngagementGraph, catalog: Catalog) -> CoEngagementGraph:
    """Project image edges onto tag pairs.

    Every image edge fans out over the tag product of its endpoints; pairs
    that collapse to a single tag are dropped (no self-loops).
    """
    projected = CoEngagementGraph()
    for (a, b), weight in sorted(graph.edges.items()):
        tags_a = catalog.image(a).tags
        tags_b = catalog.image(b).tags
        for t in sorted(tags_a):
            for u in sorted(tags_b):
                if t != u:
                    projected.add_edge(t, u, weight)
    return projected


def related_images(
    graph: CoEngagementGraph, image_id: str, k: int
) -> list[tuple[str, float]]:
    """Neighbors by weight descending (ties lexicographic), truncated to k.

    Unknown or isolated nodes yield an empty list; an image may simply have
    no co-engagements yet.
    """
    if k < 1:
        raise UsageError("k must be >= 1")
    neighbors = graph.neighbors(image_id)
    ordered = sorted(neighbors.items(), key=lambda item: (-item[1], item[0]))
    return ordered[:k]

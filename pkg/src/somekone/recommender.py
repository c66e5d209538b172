"""Candidate generation, ranking, and explanation for the image queue.

Four sources feed the queue: engagement by similar users, taste/tag match,
image co-engagement with popularity, and occasional random exploration.
Candidates are merged, scored as a weighted sum of their components, and
the strongest positive weighted component becomes the human-readable
explanation.  None of this ever reads image content; ids, tags, and
engagement data are the entire input surface.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

import numpy as np

from .catalog import Catalog
from .coengagement import CoEngagementGraph, related_images
from .errors import UsageError
from .profiling import LEARNED_STRATEGIES, Strategy, UserProfile, cosine_similarity
from .scoring import EngagementScore

COMPONENT_NAMES = ("user_cf", "taste", "coeng", "popularity", "recency_penalty")

DEFAULT_RANDOM_SLOT_RATE = 0.1
DEFAULT_NEIGHBOR_COUNT = 5
DEFAULT_POOL_K = 10
DEFAULT_QUEUE_LEN = 5
DEFAULT_POPULARITY_WEIGHT = 0.2
DEFAULT_RECENCY_WINDOW = 20
DEFAULT_RECENCY_PENALTY = -0.5


class Template:
    BECAUSE_YOU_LIKED = "because_you_liked"
    TASTE_SIMILARITY = "taste_similarity"
    SIMILAR_USERS_ENGAGED = "similar_users_engaged"
    OFTEN_VIEWED_TOGETHER = "often_viewed_together"
    NOT_SEEN_RECENTLY = "not_seen_recently"
    RANDOMLY = "randomly"


@dataclass(frozen=True)
class Explanation:
    component: str
    template_id: str
    args: dict = field(default_factory=dict)
    rendered: str = ""

    def payload(self) -> dict:
        return {
            "template": self.template_id,
            "args": dict(self.args),
            "text": self.rendered,
        }


@dataclass
class RecommendationCandidate:
    image_id: str
    source_strategy: Strategy
    components: dict[str, float]
    total: float = 0.0
    explanation: Explanation | None = None
    # Explanation material carried from generation through merge/rank.
    taste_tag: str | None = None
    taste_tag_liked: bool = False
    coeng_source: str | None = None

    def payload(self) -> dict:
        return {
            "image": self.image_id,
            "strategy": self.source_strategy.value,
            "components": {name: self.components.get(name, 0.0) for name in COMPONENT_NAMES},
            "total": self.total,
            "explanation": self.explanation.payload() if self.explanation else None,
        }


@dataclass
class RecommendationQueue:
    user_id: str
    items: list[RecommendationCandidate]
    queue_len: int = DEFAULT_QUEUE_LEN

    def payload(self) -> dict:
        return {"user": self.user_id, "items": [c.payload() for c in self.items]}


def _raw_total(candidate: RecommendationCandidate) -> float:
    return sum(candidate.components.values())


def gen_user_cf(
    user_id: str,
    profiles: dict[str, UserProfile],
    scores: dict[tuple[str, str], EngagementScore],
    seen: set[str],
    neighbors: int = DEFAULT_NEIGHBOR_COUNT,
    k: int = DEFAULT_POOL_K,
    engaged_threshold: float = 4.0,
    score_max: float = 10.0,
) -> list[RecommendationCandidate]:
    """Images that the most taste-similar users engaged with.

    Component value is the best (neighbor similarity * neighbor score /
    score_max) over the contributing neighbors.  A lone user yields nothing.
    """
    if neighbors < 1 or k < 1:
        raise UsageError("neighbors and k must be >= 1")
    me = profiles.get(user_id)
    if me is None:
        return []
    sims = []
    for other_id in sorted(profiles):
        if other_id == user_id:
            continue
        sim = cosine_similarity(me.taste, profiles[other_id].taste)
        if sim > 0.0:
            sims.append((other_id, sim))
    sims.sort(key=lambda item: (-item[1], item[0]))
    best: dict[str, float] = {}
    for other_id, sim in sims[:neighbors]:
        for (owner, image_id), score in scores.items():
            if owner != other_id or image_id in seen:
                continue
            if score.value >= engaged_threshold:
                signal = sim * score.value / score_max
                if signal > best.get(image_id, 0.0):
                    best[image_id] = signal
    ordered = sorted(best, key=lambda img: (-best[img], img))[:k]
    return [
        RecommendationCandidate(
            image_id=img,
            source_strategy=Strategy.USER_CF,
            components={"user_cf": best[img]},
            total=best[img],
        )
        for img in ordered
    ]


def gen_content(
    user_id: str,
    profile: UserProfile,
    catalog: Catalog,
    seen: set[str],
    k: int = DEFAULT_POOL_K,
    liked_tags: set[str] | None = None,
) -> list[RecommendationCandidate]:
    """Unseen images ranked by cosine between the taste vector and tag vector."""
    if k < 1:
        raise UsageError("k must be >= 1")
    liked_tags = liked_tags or set()
    taste = profile.taste
    matrix = catalog.tag_matrix
    row_norms = np.linalg.norm(matrix, axis=1)
    taste_norm = float(np.linalg.norm(taste))
    if taste_norm > 0.0:
        sims = matrix @ taste / (row_norms * taste_norm)
    else:
        sims = np.zeros(len(catalog))
    scored = []
    for row, record in enumerate(catalog.images):
        if record.image_id in seen:
            continue
        scored.append((record.image_id, float(sims[row])))
    scored.sort(key=lambda item: (-item[1], item[0]))
    out = []
    for image_id, value in scored[:k]:
        record = catalog.image(image_id)
        shared = sorted(
            (tag for tag in record.tags if profile.affinities.get(tag, 0.0) > 0),
            key=lambda t: (-profile.affinities[t], t),
        )
        top_tag = shared[0] if shared else None
        out.append(
            RecommendationCandidate(
                image_id=image_id,
                source_strategy=Strategy.CONTENT,
                components={"taste": value},
                total=value,
                taste_tag=top_tag,
                taste_tag_liked=top_tag in liked_tags if top_tag else False,
            )
        )
    return out


def gen_coengagement(
    user_id: str,
    graph: CoEngagementGraph,
    scores: dict[tuple[str, str], EngagementScore],
    seen: set[str],
    total_users: int,
    k: int = DEFAULT_POOL_K,
    engaged_threshold: float = 4.0,
    score_max: float = 10.0,
) -> list[RecommendationCandidate]:
    """Neighbors of the user's engaged images, plus session-popular images.

    coeng is the edge weight normalized by the graph's current maximum (0
    for an empty graph); popularity is the fraction of session users who
    engaged with the image.
    """
    if k < 1:
        raise UsageError("k must be >= 1")
    engaged_mine = sorted(
        img
        for (owner, img), score in scores.items()
        if owner == user_id and score.value >= engaged_threshold
    )
    max_w = graph.max_weight()
    coeng_best: dict[str, float] = {}
    coeng_src: dict[str, str] = {}
    for source_img in engaged_mine:
        for neighbor, weight in related_images(graph, source_img, k):
            if neighbor in seen:
                continue
            normalized = weight / max_w if max_w > 0 else 0.0
            if normalized > coeng_best.get(neighbor, -1.0):
                coeng_best[neighbor] = normalized
                coeng_src[neighbor] = source_img

    engaged_users_per_image: dict[str, set[str]] = {}
    for (owner, img), score in scores.items():
        if score.value >= engaged_threshold:
            engaged_users_per_image.setdefault(img, set()).add(owner)

    def popularity(img: str) -> float:
        if total_users <= 0:
            return 0.0
        return len(engaged_users_per_image.get(img, ())) / total_users

    pool = set(coeng_best)
    popular = sorted(
        (img for img in engaged_users_per_image if img not in seen),
        key=lambda img: (-popularity(img), img),
    )
    pool.update(popular[:k])

    ordered = sorted(
        pool,
        key=lambda img: (-(coeng_best.get(img, 0.0) + popularity(img)), img),
    )[:k]
    out = []
    for img in ordered:
        components = {
            "coeng": coeng_best.get(img, 0.0),
            "popularity": popularity(img),
        }
        out.append(
            RecommendationCandidate(
                image_id=img,
                source_strategy=Strategy.COENGAGEMENT,
                components=components,
                total=sum(components.values()),
                coeng_source=coeng_src.get(img),
            )
        )
    return out


def gen_random(
    user_id: str,
    catalog: Catalog,
    seen: set[str],
    rng: random.Random,
    exclude: set[str] | None = None,
) -> RecommendationCandidate | None:
    """Uniform draw from the unseen pool; falls back to the full catalog.

    All scoring components are zero by construction: exploration carries no
    signal and is explained as such.
    """
    exclude = exclude or set()
    pool = [img for img in catalog.image_ids() if img not in seen and img not in exclude]
    if not pool:
        pool = [img for img in catalog.image_ids() if img not in exclude]
    if not pool:
        return None
    index = min(int(rng.random() * len(pool)), len(pool) - 1)
    return RecommendationCandidate(
        image_id=pool[index],
        source_strategy=Strategy.RANDOM,
        components={name: 0.0 for name in COMPONENT_NAMES},
        total=0.0,
    )


def merge_candidates(
    candidates: list[RecommendationCandidate],
) -> list[RecommendationCandidate]:
    """Merge duplicates component-wise by max.

    An image reachable through two strategies is stronger evidence, and max
    avoids double counting.  The surviving source strategy is the one whose
    candidate had the larger raw total.
    """
    by_image: dict[str, RecommendationCandidate] = {}
    for cand in candidates:
        existing = by_image.get(cand.image_id)
        if existing is None:
            by_image[cand.image_id] = replace(
                cand, components=dict(cand.components), total=_raw_total(cand)
            )
            continue
        merged = dict(existing.components)
        for name, value in cand.components.items():
            merged[name] = max(merged.get(name, 0.0), value)
        winner = existing if _raw_total(existing) >= _raw_total(cand) else cand
        if cand.components.get("taste", 0.0) > existing.components.get("taste", 0.0):
            taste_tag, taste_liked = cand.taste_tag, cand.taste_tag_liked
        else:
            taste_tag, taste_liked = existing.taste_tag, existing.taste_tag_liked
        if cand.components.get("coeng", 0.0) > existing.components.get("coeng", 0.0):
            coeng_source = cand.coeng_source
        else:
            coeng_source = existing.coeng_source
        by_image[cand.image_id] = RecommendationCandidate(
            image_id=cand.image_id,
            source_strategy=winner.source_strategy,
            components=merged,
            total=sum(merged.values()),
            taste_tag=taste_tag,
            taste_tag_liked=taste_liked,
            coeng_source=coeng_source,
        )
    return [by_image[img] for img in sorted(by_image)]


def rank(
    candidates: list[RecommendationCandidate],
    profile: UserProfile,
    recent_seen: list[str] | set[str],
    popularity_weight: float = DEFAULT_POPULARITY_WEIGHT,
    recency_penalty: float = DEFAULT_RECENCY_PENALTY,
) -> list[RecommendationCandidate]:
    """Weight raw components by the profile's learned strategy weights.

    After ranking, each candidate's components are the weighted
    contributions, so its total is exactly their sum.  Sort is by total
    descending with lexicographic tie-break on image id.
    """
    merged = merge_candidates(candidates)
    recent = set(recent_seen)
    learned = {s: profile.strategy_weights.get(s, 0.0) for s in LEARNED_STRATEGIES}
    mass = sum(learned.values())
    if mass > 0:
        learned = {s: w / mass for s, w in learned.items()}
    else:
        learned = {s: 1.0 / 3.0 for s in LEARNED_STRATEGIES}

    ranked = []
    for cand in merged:
        weighted = {
            "user_cf": learned[Strategy.USER_CF] * cand.components.get("user_cf", 0.0),
            "taste": learned[Strategy.CONTENT] * cand.components.get("taste", 0.0),
            "coeng": learned[Strategy.COENGAGEMENT] * cand.components.get("coeng", 0.0),
            "popularity": popularity_weight * cand.components.get("popularity", 0.0),
            "recency_penalty": recency_penalty if cand.image_id in recent else 0.0,
        }
        ranked.append(
            replace(cand, components=weighted, total=sum(weighted.values()))
        )
    ranked.sort(key=lambda c: (-c.total, c.image_id))
    return ranked


_TEMPLATE_BY_COMPONENT = {
    "user_cf": Template.SIMILAR_USERS_ENGAGED,
    "popularity": Template.SIMILAR_USERS_ENGAGED,
    "coeng": Template.OFTEN_VIEWED_TOGETHER,
    "taste": Template.TASTE_SIMILARITY,
    "recency_penalty": Template.NOT_SEEN_RECENTLY,
}


def explain(candidate: RecommendationCandidate) -> Explanation:
    """Surface the strongest positive weighted component as the reason.

    Ties break lexicographically on the component name.  With no positive
    signal at all, a random-strategy candidate is explained as exploration;
    a ranked candidate whose every component is exactly zero (so not even a
    recency penalty applied) was queued because it has not been in the feed
    recently.
    """
    components = {name: candidate.components.get(name, 0.0) for name in COMPONENT_NAMES}
    positives = {name: v for name, v in components.items() if v > 0.0}
    if positives:
        component = sorted(positives.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        template = _TEMPLATE_BY_COMPONENT[component]
        if component == "taste":
            tag = candidate.taste_tag or ""
            if candidate.taste_tag_liked:
                return Explanation(
                    component,
                    Template.BECAUSE_YOU_LIKED,
                    {"tag": tag},
                    f"Because you liked #{tag} images.",
                )
            return Explanation(
                component,
                Template.TASTE_SIMILARITY,
                {"tag": tag},
                f"Ranked high for taste similarity to your most engaged topic #{tag}."
                if tag
                else "Ranked high for taste similarity to your profile.",
            )
        if component == "coeng":
            src = candidate.coeng_source or ""
            return Explanation(
                component,
                template,
                {"image": src},
                f"Often viewed together with {src}, which you engaged with.",
            )
        if component == "popularity":
            return Explanation(
                component,
                template,
                {"variant": "popularity"},
                "Popular right now: many users in this session engaged with it.",
            )
        if component == "recency_penalty":
            return Explanation(
                component, template, {}, "It has not appeared in your feed recently."
            )
        return Explanation(
            component,
            template,
            {},
            "Users with a taste profile similar to yours engaged with this image.",
        )
    if (
        candidate.source_strategy is not Strategy.RANDOM
        and all(v == 0.0 for v in components.values())
    ):
        return Explanation(
            "recency_penalty",
            Template.NOT_SEEN_RECENTLY,
            {},
            "It has not appeared in your feed recently.",
        )
    return Explanation(
        "none", Template.RANDOMLY, {}, "Picked at random to mix things up."
    )


def next_queue(
    user_id: str,
    *,
    catalog: Catalog,
    profiles: dict[str, UserProfile],
    scores: dict[tuple[str, str], EngagementScore],
    graph: CoEngagementGraph,
    seen: set[str],
    recent_seen: list[str] | set[str],
    rng: random.Random,
    liked_tags: set[str] | None = None,
    n: int = DEFAULT_QUEUE_LEN,
    epsilon: float = DEFAULT_RANDOM_SLOT_RATE,
    engaged_threshold: float = 4.0,
    score_max: float = 10.0,
    neighbors: int = DEFAULT_NEIGHBOR_COUNT,
    pool_k: int = DEFAULT_POOL_K,
    popularity_weight: float = DEFAULT_POPULARITY_WEIGHT,
    recency_penalty: float = DEFAULT_RECENCY_PENALTY,
) -> RecommendationQueue:
    """Fill the user's upcoming queue slot by slot.

    Each slot explores (a random unseen image) with probability epsilon,
    otherwise takes the top remaining ranked candidate.  The queue never
    duplicates an image; an exhausted catalog shortens the queue rather
    than erroring.
    """
    if n < 1:
        raise UsageError("queue length must be >= 1")
    profile = profiles.get(user_id) or UserProfile(user_id=user_id)
    # Popularity denominators count users visible in the log (anyone with a
    # score), not the roster, so queue contents stay a pure function of the
    # event history and replays agree with live sessions.
    total_users = len({owner for owner, _ in scores})
    pool = (
        gen_user_cf(
            user_id, profiles, scores, seen,
            neighbors=neighbors, k=pool_k,
            engaged_threshold=engaged_threshold, score_max=score_max,
        )
        + gen_content(user_id, profile, catalog, seen, k=pool_k, liked_tags=liked_tags)
        + gen_coengagement(
            user_id, graph, scores, seen, total_users=total_users,
            k=pool_k, engaged_threshold=engaged_threshold, score_max=score_max,
        )
    )
    ranked = rank(
        pool, profile, recent_seen,
        popularity_weight=popularity_weight, recency_penalty=recency_penalty,
    )
    items: list[RecommendationCandidate] = []
    queued: set[str] = set()
    ranked_iter = iter(ranked)
    for _ in range(n):
        candidate: RecommendationCandidate | None = None
        if rng.random() < epsilon:
            candidate = gen_random(user_id, catalog, seen, rng, exclude=queued)
        else:
            for nxt in ranked_iter:
                if nxt.image_id not in queued:
                    candidate = nxt
                    break
            if candidate is None:
                candidate = gen_random(user_id, catalog, seen, rng, exclude=queued)
        if candidate is None:
            break
        candidate.explanation = explain(candidate)
        items.append(candidate)
        queued.add(candidate.image_id)
    return RecommendationQueue(user_id=user_id, items=items, queue_len=n)

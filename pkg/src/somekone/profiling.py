"""User profiles: tag affinities, taste vectors, similarity, strategy weights.

A profile is rebuilt from the user's engagement scores (affinities and the
taste vector are stateless); the per-strategy hit rates are the only
carried state, updated by an exponential moving average whenever a
recommended image first crosses the engagement threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .catalog import Catalog
from .errors import UsageError
from .scoring import EngagementScore

DEFAULT_SIMILARITY_THRESHOLD = 0.15
DEFAULT_EMA_ALPHA = 0.2
DEFAULT_WEIGHT_FLOOR = 0.05
DEFAULT_RANDOM_SHARE = 0.1


class Strategy(str, Enum):
    USER_CF = "user_cf"
    CONTENT = "content"
    COENGAGEMENT = "coengagement"
    RANDOM = "random"


LEARNED_STRATEGIES = (Strategy.USER_CF, Strategy.CONTENT, Strategy.COENGAGEMENT)


def tag_affinities(
    scores: dict[tuple[str, str], EngagementScore] | dict[str, EngagementScore],
    catalog: Catalog,
) -> dict[str, float]:
    """Accumulate one user's score mass onto each tag of each scored image.

    Accepts the user's scores keyed either by (user, image) pair or by
    image id.  All values are non-negative because scores are.
    """
    affinities: dict[str, float] = {}
    for key, score in scores.items():
        image_id = key[1] if isinstance(key, tuple) else key
        record = catalog.image(image_id)
        for tag in record.tags:
            affinities[tag] = affinities.get(tag, 0.0) + score.value
    return {tag: affinities[tag] for tag in sorted(affinities)}


def taste_vector(affinities: dict[str, float], vocabulary: tuple[str, ...]) -> np.ndarray:
    """Affinity vector over the vocabulary order, normalized to unit length.

    All-zero affinities produce the zero vector (a representable new user),
    never an error.
    """
    vec = np.zeros(len(vocabulary), dtype=np.float64)
    index = {tag: i for i, tag in enumerate(vocabulary)}
    for tag, value in affinities.items():
        if value < 0:
            raise UsageError(f"negative affinity for tag {tag!r}")
        if tag not in index:
            raise UsageError(f"tag {tag!r} missing from vocabulary")
        vec[index[tag]] = value
    peak = float(vec.max())
    if peak == 0.0:
        return vec
    # scale by the peak first so squaring tiny affinities cannot underflow
    vec = vec / peak
    return vec / float(np.linalg.norm(vec))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a||b|); 0.0 when either vector is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass(frozen=True)
class SimilarityEdge:
    user_a: str
    user_b: str
    weight: float


@dataclass
class UserProfile:
    user_id: str
    affinities: dict[str, float] = field(default_factory=dict)
    taste: np.ndarray = field(default_factory=lambda: np.zeros(0))
    strategy_weights: dict[Strategy, float] = field(default_factory=dict)
    totals_by_kind: dict[str, int] = field(default_factory=dict)
    top_images_by_tag: dict[str, list[str]] = field(default_factory=dict)
    # EMA state behind strategy_weights; not part of the exported payload.
    hit_rates: dict[Strategy, float] = field(
        default_factory=lambda: {s: 0.0 for s in LEARNED_STRATEGIES}
    )

    def payload(self) -> dict:
        return {
            "user": self.user_id,
            "affinities": {t: self.affinities[t] for t in sorted(self.affinities)},
            "taste": [float(x) for x in self.taste],
            "strategy_weights": {
                s.value: self.strategy_weights[s] for s in Strategy
            },
            "totals": {k: self.totals_by_kind[k] for k in sorted(self.totals_by_kind)},
            "top_tags": [
                {
                    "tag": tag,
                    "affinity": self.affinities[tag],
                    "top_images": self.top_images_by_tag.get(tag, []),
                }
                for tag in ranked_tags(self.affinities)
            ],
        }


def ranked_tags(affinities: dict[str, float]) -> list[str]:
    """Tags by affinity descending, ties broken lexicographically."""
    return sorted(affinities, key=lambda t: (-affinities[t], t))


def strategy_weights_from_hit_rates(
    hit_rates: dict[Strategy, float],
    floor: float = DEFAULT_WEIGHT_FLOOR,
    random_share: float = DEFAULT_RANDOM_SHARE,
) -> dict[Strategy, float]:
    """Normalize hit rates into strategy weights.

    The random strategy is pinned to the exploration share (never below the
    floor) and each learned strategy gets the floor plus its proportional
    slice of the remaining mass, so the weights always sum to 1 and every
    weight stays >= floor regardless of how lopsided the hit rates get.
    """
    pinned = min(max(random_share, floor), 1.0 - 3 * floor)
    spread = 1.0 - pinned - 3 * floor
    total = sum(hit_rates.get(s, 0.0) for s in LEARNED_STRATEGIES)
    weights: dict[Strategy, float] = {}
    for s in LEARNED_STRATEGIES:
        share = (hit_rates.get(s, 0.0) / total) if total > 0 else 1.0 / 3.0
        weights[s] = floor + spread * share
    weights[Strategy.RANDOM] = pinned
    return weights


def update_strategy_weights(
    profile: UserProfile,
    feedback: tuple[Strategy | str, float],
    score_max: float = 10.0,
    alpha: float = DEFAULT_EMA_ALPHA,
    floor: float = DEFAULT_WEIGHT_FLOOR,
    random_share: float = DEFAULT_RANDOM_SHARE,
) -> UserProfile:
    """Fold one (strategy, engagement value) observation into the profile.

    hit_rate(s) <- (1 - alpha) * hit_rate(s) + alpha * value / score_max for
    the strategy that sourced the image; the others keep their rate.  The
    random strategy is exploration, not a learner, so feedback on it leaves
    the rates untouched.
    """
    strategy_raw, value = feedback
    try:
        strategy = Strategy(strategy_raw)
    except ValueError:
        raise UsageError(f"unknown strategy: {strategy_raw!r}") from None
    if not 0.0 <= value <= score_max:
        raise UsageError(f"feedback value {value} outside [0, {score_max}]")
    rates = dict(profile.hit_rates)
    if strategy is not Strategy.RANDOM:
        rates[strategy] = (1.0 - alpha) * rates[strategy] + alpha * (value / score_max)
    profile.hit_rates = rates
    profile.strategy_weights = strategy_weights_from_hit_rates(
        rates, floor=floor, random_share=random_share
    )
    return profile


def build_profile(
    user_id: str,
    user_scores: dict[str, EngagementScore],
    catalog: Catalog,
    totals_by_kind: dict[str, int] | None = None,
    hit_rates: dict[Strategy, float] | None = None,
    floor: float = DEFAULT_WEIGHT_FLOOR,
    random_share: float = DEFAULT_RANDOM_SHARE,
) -> UserProfile:
    """Assemble a full profile from the user's scores (keyed by image id)."""
    affinities = tag_affinities(user_scores, catalog)
    taste = taste_vector(affinities, catalog.tag_vocabulary)
    by_tag: dict[str, list[str]] = {}
    ordered_images = sorted(
        user_scores, key=lambda img: (-user_scores[img].value, img)
    )
    for image_id in ordered_images:
        for tag in catalog.image(image_id).tags:
            by_tag.setdefault(tag, []).append(image_id)
    rates = dict(hit_rates) if hit_rates else {s: 0.0 for s in LEARNED_STRATEGIES}
    return UserProfile(
        user_id=user_id,
        affinities=affinities,
        taste=taste,
        strategy_weights=strategy_weights_from_hit_rates(
            rates, floor=floor, random_share=random_share
        ),
        totals_by_kind=dict(totals_by_kind or {}),
        top_images_by_tag=by_tag,
        hit_rates=rates,
    )


def similarity_edges(
    profiles: dict[str, UserProfile],
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> list[SimilarityEdge]:
    """One edge per unordered user pair with cosine >= threshold."""
    edges: list[SimilarityEdge] = []
    users = sorted(profiles)
    for i, a in enumerate(users):
        for b in users[i + 1 :]:
            weight = cosine_similarity(profiles[a].taste, profiles[b].taste)
            if weight >= threshold:
                edges.append(SimilarityEdge(a, b, weight))
    return edges


def profile_summary(profile: UserProfile, k: int) -> dict:
    """Top-k tags with per-tag top images and the per-kind action totals."""
    if k < 1:
        raise UsageError("k must be >= 1")
    tags = ranked_tags(profile.affinities)[:k]
    return {
        "user": profile.user_id,
        "top_tags": [
            {
                "tag": tag,
                "affinity": profile.affinities[tag],
                "top_images": profile.top_images_by_tag.get(tag, []),
            }
            for tag in tags
        ],
        "totals": dict(profile.totals_by_kind),
    }

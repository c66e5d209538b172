import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from somekone.errors import UsageError
from somekone.profiling import (
    LEARNED_STRATEGIES,
    Strategy,
    UserProfile,
    build_profile,
    cosine_similarity,
    profile_summary,
    ranked_tags,
    similarity_edges,
    strategy_weights_from_hit_rates,
    tag_affinities,
    taste_vector,
    update_strategy_weights,
)
from somekone.scoring import EngagementScore


def fake_score(user, image, value):
    return EngagementScore(user, image, value, {"seen": value})


def cosine_oracle(a, b):
    """Brute-force dot/norm computation, independent of the implementation."""
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


# -- tag affinities -----------------------------------------------------------

def test_affinity_summation(catalog):
    scores = {
        ("u1", "img_001"): fake_score("u1", "img_001", 10.0),  # musiikki
        ("u1", "img_003"): fake_score("u1", "img_003", 5.0),   # musiikki+taiteellinen
    }
    affinities = tag_affinities(scores, catalog)
    assert affinities == {"musiikki": 15.0, "taiteellinen": 5.0}


def test_affinity_empty(catalog):
    assert tag_affinities({}, catalog) == {}


def test_affinity_fan_out(catalog):
    # img_011 carries pelit+avaruus: one image spreads to every tag it has
    scores = {("u1", "img_011"): fake_score("u1", "img_011", 4.0)}
    assert tag_affinities(scores, catalog) == {"avaruus": 4.0, "pelit": 4.0}


def test_affinity_additive_over_disjoint_images(catalog):
    s1 = {("u1", "img_001"): fake_score("u1", "img_001", 3.0)}
    s2 = {("u1", "img_006"): fake_score("u1", "img_006", 2.0)}
    merged = tag_affinities({**s1, **s2}, catalog)
    a1 = tag_affinities(s1, catalog)
    a2 = tag_affinities(s2, catalog)
    for tag in set(a1) | set(a2):
        assert merged[tag] == pytest.approx(a1.get(tag, 0) + a2.get(tag, 0))


# -- taste vector --------------------------------------------------------------

def test_taste_three_four_five():
    vec = taste_vector({"music": 3.0, "art": 4.0}, ("art", "music"))
    assert vec == pytest.approx([0.8, 0.6])


def test_taste_zero_vector_allowed():
    vec = taste_vector({}, ("a", "b"))
    assert np.array_equal(vec, np.zeros(2))


def test_taste_single_tag_unit():
    vec = taste_vector({"music": 7.0}, ("art", "music"))
    assert vec == pytest.approx([0.0, 1.0])


def test_taste_negative_rejected():
    with pytest.raises(UsageError):
        taste_vector({"a": -1.0}, ("a",))


@settings(max_examples=200)
@given(st.dictionaries(st.sampled_from(list("abcdef")), st.floats(0, 100), min_size=1))
def test_taste_norm_is_one_or_zero(affinities):
    vec = taste_vector(affinities, tuple("abcdef"))
    norm = float(np.linalg.norm(vec))
    if any(v > 0 for v in affinities.values()):
        assert norm == pytest.approx(1.0, abs=1e-12)
    else:
        assert norm == 0.0


# -- cosine similarity ----------------------------------------------------------

def test_cosine_identical():
    v = np.array([1.0, 2.0, 3.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0)


def test_cosine_disjoint_support():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 0.0


def test_cosine_half():
    # hand computed: 1 / (sqrt(2) * sqrt(2))
    a, b = np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0, 1.0])
    assert cosine_similarity(a, b) == pytest.approx(0.5)
    assert cosine_oracle(a, b) == pytest.approx(0.5)


def test_cosine_dimension_mismatch():
    with pytest.raises(UsageError):
        cosine_similarity(np.zeros(2), np.zeros(3))


def test_cosine_zero_vector_rule():
    assert cosine_similarity(np.zeros(3), np.array([1.0, 1.0, 1.0])) == 0.0


def test_cosine_against_oracle_seeded():
    rng = random.Random(424242)
    for _ in range(1000):
        dim = rng.randrange(1, 33)
        a = np.array([rng.random() * 10 for _ in range(dim)])
        b = np.array([rng.random() * 10 for _ in range(dim)])
        if rng.random() < 0.05:
            a = np.zeros(dim)
        got = cosine_similarity(a, b)
        assert got == pytest.approx(cosine_oracle(a, b), abs=1e-9)
        assert got == pytest.approx(cosine_similarity(b, a), abs=1e-12)
        assert 0.0 <= got <= 1.0 + 1e-12


@settings(max_examples=150)
@given(
    st.lists(st.floats(0, 1000), min_size=1, max_size=16),
    st.floats(0.001, 1000),
)
def test_cosine_scale_invariant(values, c):
    a = np.array(values)
    b = np.array(values[::-1])
    assert cosine_similarity(c * a, b) == pytest.approx(cosine_similarity(a, b), abs=1e-9)


# -- similarity edges ------------------------------------------------------------

def _profile_with_taste(user, affinities, vocab):
    return UserProfile(user_id=user, affinities=affinities,
                       taste=taste_vector(affinities, vocab))


def test_edges_identical_tastes():
    vocab = ("a", "b")
    profiles = {
        "u1": _profile_with_taste("u1", {"a": 2.0}, vocab),
        "u2": _profile_with_taste("u2", {"a": 5.0}, vocab),
    }
    edges = similarity_edges(profiles, 0.5)
    assert len(edges) == 1
    assert edges[0].weight == pytest.approx(1.0)
    assert {edges[0].user_a, edges[0].user_b} == {"u1", "u2"}


def test_edges_orthogonal_tastes():
    vocab = ("a", "b")
    profiles = {
        "u1": _profile_with_taste("u1", {"a": 2.0}, vocab),
        "u2": _profile_with_taste("u2", {"b": 5.0}, vocab),
    }
    assert similarity_edges(profiles, 0.5) == []


def test_edges_pair_bound_18_users():
    vocab = ("a",)
    profiles = {
        f"u{i}": _profile_with_taste(f"u{i}", {"a": 1.0 + i}, vocab)
        for i in range(18)
    }
    edges = similarity_edges(profiles, 0.0)
    assert len(edges) <= 18 * 17 // 2
    assert len(edges) == 153  # identical direction: every pair connects
    assert not any(e.user_a == e.user_b for e in edges)


def test_zero_taste_user_has_no_edges():
    vocab = ("a",)
    profiles = {
        "u1": _profile_with_taste("u1", {"a": 1.0}, vocab),
        "u2": _profile_with_taste("u2", {}, vocab),
    }
    assert similarity_edges(profiles, 0.1) == []


# -- strategy weights -------------------------------------------------------------

def test_weights_uniform_at_start():
    weights = strategy_weights_from_hit_rates({s: 0.0 for s in LEARNED_STRATEGIES})
    assert weights[Strategy.RANDOM] == pytest.approx(0.1)
    learned = [weights[s] for s in LEARNED_STRATEGIES]
    assert all(w == pytest.approx(learned[0]) for w in learned)
    assert sum(weights.values()) == pytest.approx(1.0, abs=1e-9)


def test_feedback_raises_shown_strategy():
    profile = UserProfile(user_id="u1")
    profile.strategy_weights = strategy_weights_from_hit_rates(profile.hit_rates)
    update_strategy_weights(profile, (Strategy.CONTENT, 10.0))
    weights = profile.strategy_weights
    assert weights[Strategy.CONTENT] > weights[Strategy.USER_CF]
    assert weights[Strategy.CONTENT] > weights[Strategy.COENGAGEMENT]
    # hand-run of the EMA recurrence from a cold start
    assert profile.hit_rates[Strategy.CONTENT] == pytest.approx(0.2 * 1.0)


def test_zero_feedback_keeps_equal_rates():
    profile = UserProfile(user_id="u1")
    before = strategy_weights_from_hit_rates(profile.hit_rates)
    update_strategy_weights(profile, (Strategy.USER_CF, 0.0))
    after = profile.strategy_weights
    for s in Strategy:
        assert after[s] == pytest.approx(before[s], abs=1e-12)


def test_ema_is_order_dependent_recurrence():
    p = UserProfile(user_id="u1")
    update_strategy_weights(p, (Strategy.CONTENT, 10.0))
    update_strategy_weights(p, (Strategy.CONTENT, 5.0))
    # hit = a*1.0 then (1-a)*hit + a*0.5 with a=0.2
    assert p.hit_rates[Strategy.CONTENT] == pytest.approx(0.8 * 0.2 + 0.2 * 0.5)


def test_random_feedback_is_noop():
    p = UserProfile(user_id="u1")
    update_strategy_weights(p, (Strategy.RANDOM, 10.0))
    assert all(v == 0.0 for v in p.hit_rates.values())


def test_unknown_strategy_rejected():
    with pytest.raises(UsageError):
        update_strategy_weights(UserProfile(user_id="u1"), ("magic", 1.0))


def test_out_of_range_feedback_rejected():
    with pytest.raises(UsageError):
        update_strategy_weights(UserProfile(user_id="u1"), (Strategy.CONTENT, 11.0))


@settings(max_examples=200)
@given(
    st.lists(
        st.tuples(st.sampled_from(list(Strategy)), st.floats(0, 10)),
        max_size=30,
    )
)
def test_weights_sum_one_and_floored_after_any_sequence(feedbacks):
    profile = UserProfile(user_id="u1")
    for strategy, value in feedbacks:
        update_strategy_weights(profile, (strategy, value))
        weights = profile.strategy_weights
        assert sum(weights.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(w >= 0.05 - 1e-12 for w in weights.values())


# -- profile summary ---------------------------------------------------------------

def test_summary_top_tags(catalog):
    profile = UserProfile(
        user_id="u1",
        affinities={"musiikki": 15.0, "taiteellinen": 9.0, "koira": 2.0},
        top_images_by_tag={"musiikki": ["img_001", "img_002"]},
        totals_by_kind={"like": 3},
    )
    summary = profile_summary(profile, 2)
    assert [t["tag"] for t in summary["top_tags"]] == ["musiikki", "taiteellinen"]
    assert summary["top_tags"][0]["top_images"] == ["img_001", "img_002"]
    assert summary["totals"] == {"like": 3}


def test_summary_k_larger_than_tags():
    profile = UserProfile(user_id="u1", affinities={"a": 1.0})
    assert len(profile_summary(profile, 10)["top_tags"]) == 1


def test_summary_tie_breaks_lexicographically():
    profile = UserProfile(user_id="u1", affinities={"b": 5.0, "a": 5.0})
    assert [t["tag"] for t in profile_summary(profile, 1)["top_tags"]] == ["a"]
    assert ranked_tags({"b": 5.0, "a": 5.0}) == ["a", "b"]


def test_build_profile_orders_images_by_score(catalog):
    scores = {
        "img_001": fake_score("u1", "img_001", 4.0),
        "img_002": fake_score("u1", "img_002", 9.0),
        "img_004": fake_score("u1", "img_004", 9.0),
    }
    profile = build_profile("u1", scores, catalog)
    assert profile.top_images_by_tag["musiikki"] == ["img_002", "img_004", "img_001"]
    assert float(np.linalg.norm(profile.taste)) == pytest.approx(1.0)

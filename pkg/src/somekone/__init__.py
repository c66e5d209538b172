"""Somekone engine: observable tracking, profiling, and recommendation.

A classroom-deployable social-media simulation that keeps every byte of
engagement data local while making the machinery behind feeds (event
tracking, engagement scoring, taste profiles, collaborative filtering,
explanations, and the classroom similarity graph) visible in real time.
"""

__version__ = "0.1.0"

from .catalog import Catalog, ImageRecord, load_catalog, tag_vector
from .config import EngineConfig, load_config
from .scoring import EngagementScore, WeightTable, all_scores, default_weights, engagement_score
from .session import Session, create_session
from .tracking import ActionLog, Emoji, EngagementEvent, EventKind, ShareScope

__all__ = [
    "ActionLog",
    "Catalog",
    "Emoji",
    "EngagementEvent",
    "EngagementScore",
    "EngineConfig",
    "EventKind",
    "ImageRecord",
    "Session",
    "ShareScope",
    "WeightTable",
    "all_scores",
    "create_session",
    "default_weights",
    "engagement_score",
    "load_catalog",
    "load_config",
    "tag_vector",
]

"""Session configuration: weights, thresholds, exploration, and the seed.

Everything that shapes derived state lives here so that an exported
(config, catalog, log) triple fully determines a session.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError
from .scoring import WeightTable, weights_from_mapping


@dataclass(frozen=True)
class EngineConfig:
    weights: WeightTable = field(default_factory=WeightTable)
    seed: int = 0
    epsilon: float = 0.1                 # random-slot rate per queue slot
    engaged_threshold: float = 4.0       # score at which an image counts as engaged
    similarity_threshold: float = 0.15   # cosine floor for similarity edges
    ema_alpha: float = 0.2               # strategy hit-rate learning rate
    weight_floor: float = 0.05           # minimum per-strategy weight
    queue_len: int = 5
    neighbors: int = 5                   # user-CF neighborhood size
    pool_k: int = 10                     # per-generator candidate pool size
    popularity_weight: float = 0.2
    recency_window: int = 20
    recency_penalty: float = -0.5
    color_iters: int = 50                # color-propagation passes per snapshot
    pairing_ttl_seconds: int = 600

    def validate(self) -> None:
        self.weights.validate()
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon {self.epsilon} outside [0, 1]")
        if not 0.0 < self.engaged_threshold <= self.weights.score_max:
            raise ConfigError(
                f"engaged_threshold {self.engaged_threshold} outside "
                f"(0, {self.weights.score_max}]"
            )
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError("similarity_threshold must be in [0, 1]")
        if not 0.0 < self.ema_alpha <= 1.0:
            raise ConfigError("ema_alpha must be in (0, 1]")
        if not 0.0 < self.weight_floor < 0.25:
            raise ConfigError("weight_floor must be in (0, 0.25)")
        if self.queue_len < 1 or self.neighbors < 1 or self.pool_k < 1:
            raise ConfigError("queue_len, neighbors, and pool_k must be >= 1")
        if self.recency_window < 0:
            raise ConfigError("recency_window must be >= 0")
        if self.recency_penalty > 0:
            raise ConfigError("recency_penalty must be <= 0")
        if self.popularity_weight < 0:
            raise ConfigError("popularity_weight must be >= 0")
        if self.pairing_ttl_seconds < 1:
            raise ConfigError("pairing_ttl_seconds must be >= 1")

    def to_document(self) -> dict:
        doc = asdict(self)
        doc["weights"] = {k: v for k, v in sorted(asdict(self.weights).items())}
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "EngineConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        kwargs = dict(doc)
        if "weights" in kwargs:
            kwargs["weights"] = weights_from_mapping(kwargs["weights"])
        config = replace(cls(), **kwargs)
        config.validate()
        return config


def load_config(source: bytes | str) -> EngineConfig:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return EngineConfig.from_document(doc)

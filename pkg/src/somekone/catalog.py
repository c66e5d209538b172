"""Labeled image catalog: load, validate, and serve tag vectors.

The catalog is the fixed content universe of a session.  It is immutable
after load (there is deliberately no insert/upload path) and every scoring
and content-based recommendation step resolves image ids and tags against
it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import CatalogError, ReferentialError

_ALLOWED_KEYS = {"id", "uri", "tags", "creator", "title"}
_REQUIRED_KEYS = {"id", "uri", "tags", "creator"}


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    content_uri: str
    tags: frozenset[str]
    creator_id: str
    title: str | None = None


@dataclass(frozen=True)
class Catalog:
    """Validated, immutable image set.

    ``tag_vocabulary`` is the lexicographically sorted union of all image
    tags; its order is the shared basis for every tag/taste vector.
    ``digest`` is the sha256 of the exact bytes the catalog was loaded
    from, used to pin exports to their content.
    """

    images: tuple[ImageRecord, ...]
    tag_vocabulary: tuple[str, ...]
    creators: frozenset[str]
    digest: str
    by_id: Mapping[str, ImageRecord] = field(repr=False)
    _tag_index: Mapping[str, int] = field(repr=False)
    _tag_matrix: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.images)

    def image(self, image_id: str) -> ImageRecord:
        rec = self.by_id.get(image_id)
        if rec is None:
            raise ReferentialError(f"unknown image id: {image_id!r}")
        return rec

    def image_ids(self) -> list[str]:
        return [rec.image_id for rec in self.images]

    @property
    def tag_matrix(self) -> np.ndarray:
        """Binary (n_images, n_tags) indicator matrix in catalog order."""
        return self._tag_matrix

    def row_of(self, image_id: str) -> int:
        self.image(image_id)
        return self._row_index[image_id]  # type: ignore[attr-defined]

    def to_document(self) -> list[dict]:
        """Round-trippable plain representation (the on-disk schema)."""
        out = []
        for rec in self.images:
            entry: dict = {
                "id": rec.image_id,
                "uri": rec.content_uri,
                "tags": sorted(rec.tags),
                "creator": rec.creator_id,
            }
            if rec.title is not None:
                entry["title"] = rec.title
            out.append(entry)
        return out


def _parse_record(index: int, raw: object) -> ImageRecord:
    if not isinstance(raw, dict):
        raise CatalogError(f"record {index}: expected object, got {type(raw).__name__}")
    unknown = set(raw) - _ALLOWED_KEYS
    if unknown:
        raise CatalogError(f"record {index}: unknown fields {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(raw)
    if missing:
        raise CatalogError(f"record {index}: missing fields {sorted(missing)}")
    image_id = raw["id"]
    uri = raw["uri"]
    creator = raw["creator"]
    tags = raw["tags"]
    title = raw.get("title")
    if not isinstance(image_id, str) or not image_id:
        raise CatalogError(f"record {index}: 'id' must be a non-empty string")
    if not isinstance(uri, str) or not uri:
        raise CatalogError(f"record {index}: 'uri' must be a non-empty string")
    if not isinstance(creator, str) or not creator:
        raise CatalogError(f"record {index}: 'creator' must be a non-empty string")
    if title is not None and not isinstance(title, str):
        raise CatalogError(f"record {index}: 'title' must be a string")
    if not isinstance(tags, list) or not tags:
        raise CatalogError(f"record {index}: 'tags' must be a non-empty array")
    norm: set[str] = set()
    for tag in tags:
        if not isinstance(tag, str) or not tag.strip():
            raise CatalogError(f"record {index}: empty or non-string tag")
        norm.add(tag.strip().lower())
    return ImageRecord(
        image_id=image_id,
        content_uri=uri,
        tags=frozenset(norm),
        creator_id=creator,
        title=title,
    )


def load_catalog(source: bytes | str | IO[bytes]) -> Catalog:
    """Parse and validate a catalog document (UTF-8 JSON, top-level array).

    Identical input bytes always produce an identical Catalog, including
    vocabulary order.
    """
    if hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        data = source
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CatalogError(f"catalog is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise CatalogError("catalog document must be a top-level array")
    if not doc:
        raise CatalogError("catalog must be non-empty")

    images = []
    seen_ids: set[str] = set()
    for index, raw in enumerate(doc):
        rec = _parse_record(index, raw)
        if rec.image_id in seen_ids:
            raise CatalogError(f"duplicate image id {rec.image_id!r} at record {index}")
        seen_ids.add(rec.image_id)
        images.append(rec)

    vocabulary = tuple(sorted({tag for rec in images for tag in rec.tags}))
    tag_index = {tag: i for i, tag in enumerate(vocabulary)}
    matrix = np.zeros((len(images), len(vocabulary)), dtype=np.float64)
    row_index = {}
    for row, rec in enumerate(images):
        row_index[rec.image_id] = row
        for tag in rec.tags:
            matrix[row, tag_index[tag]] = 1.0
    matrix.setflags(write=False)

    catalog = Catalog(
        images=tuple(images),
        tag_vocabulary=vocabulary,
        creators=frozenset(rec.creator_id for rec in images),
        digest=hashlib.sha256(data).hexdigest(),
        by_id={rec.image_id: rec for rec in images},
        _tag_index=tag_index,
        _tag_matrix=matrix,
    )
    object.__setattr__(catalog, "_row_index", row_index)
    return catalog


def tag_vector(image: ImageRecord, vocabulary: Iterable[str]) -> np.ndarray:
    """Binary indicator vector for an image over a tag vocabulary.

    Raises ReferentialError if the image carries a tag the vocabulary does
    not contain, which would silently drop signal otherwise.
    """
    vocab = list(vocabulary)
    positions = {tag: i for i, tag in enumerate(vocab)}
    vec = np.zeros(len(vocab), dtype=np.float64)
    for tag in image.tags:
        if tag not in positions:
            raise ReferentialError(
                f"image {image.image_id!r} tag {tag!r} missing from vocabulary"
            )
        vec[positions[tag]] = 1.0
    return vec

"""Image-to-song retrieval cascade.

1. nearest images to the query in CNN-feature space,
2. nearest songs to each of those images in embedding space,
3. fuse the per-image song lists into one ranked list.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .embedding import EmbeddingModel
from .errors import InvalidInputError
from .features import FeatureStore
from .graph import VertexKind


@dataclass(frozen=True)
class RetrievalConfig:
    n_images: int = 5
    songs_per_image: int = 2
    final_k: int = 10

    def __post_init__(self):
        for name in ("n_images", "songs_per_image", "final_k"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1")


@dataclass(frozen=True)
class Recommendation:
    song_id: str
    distance: float
    source_image: str
    image_rank: int


class RecommendationList(list):
    """Ranked ``Recommendation`` entries; song ids are unique."""

    @property
    def song_ids(self) -> list[str]:
        return [r.song_id for r in self]


def knn_arrays(query, ids: Sequence[str], matrix: np.ndarray, k: int | None) -> list[tuple[str, float]]:
    """Exact Euclidean kNN over the rows of ``matrix``.

    Sorted ascending by distance, ties broken by ascending id. ``k=None``
    ranks the whole corpus.
    """
    q = np.asarray(query, dtype=np.float64).ravel()
    if k is not None and k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if len(ids) == 0:
        return []
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != q.size:
        raise InvalidInputError(f"dimension mismatch: query {q.size}, corpus {m.shape[-1]}")
    dist = np.sqrt(np.sum((m - q) ** 2, axis=1))
    id_rank = np.empty(len(ids), dtype=np.int64)
    id_rank[np.argsort(np.asarray(ids, dtype=object), kind="stable")] = np.arange(len(ids))
    order = np.lexsort((id_rank, dist))
    if k is not None:
        order = order[:k]
    return [(ids[i], float(dist[i])) for i in order]


def knn(query, corpus: Mapping[str, Sequence[float]], k: int) -> list[tuple[str, float]]:
    ids = list(corpus)
    if not ids:
        return knn_arrays(query, ids, np.zeros((0, 0)), k)
    dims = {np.size(corpus[i]) for i in ids}
    if len(dims) != 1:
        raise InvalidInputError("corpus vectors have differing dimensions")
    matrix = np.vstack([np.asarray(corpus[i], dtype=np.float64).ravel() for i in ids])
    return knn_arrays(query, ids, matrix, k)


def nearest_images(query_feature, store: FeatureStore, n: int | None) -> list[tuple[str, float]]:
    if np.size(query_feature) != store.dim:
        raise InvalidInputError(f"query has {np.size(query_feature)} dims, store has {store.dim}")
    return knn_arrays(query_feature, store.ids, store.matrix, n)


class _SongIndex:
    """Song vertex vectors of a model, kept for repeated lookups."""

    def __init__(self, model: EmbeddingModel):
        self.model = model
        ids = model.ids_of_kind(VertexKind.SONG)
        self.song_ids = [model.vertices[i].external_id for i in ids]
        self.matrix = model.vertex_vectors[ids]

    def for_image(self, image_id: str, m: int | None):
        query = self.model.vector(VertexKind.IMAGE, image_id)
        return knn_arrays(query, self.song_ids, self.matrix, m)


def songs_for_image(image_id: str, model: EmbeddingModel, m: int | None) -> list[tuple[str, float]]:
    """Songs nearest to the image's vertex vector (context vectors unused)."""
    return _SongIndex(model).for_image(image_id, m)


def fuse(per_image: Sequence[tuple[str, Sequence[tuple[str, float]]]], songs_per_image: int, final_k: int) -> RecommendationList:
    """Interleave per-image song rankings in (image rank, song rank) order.

    ``per_image`` holds (image id, full song ranking) in image rank order.
    The top ``songs_per_image`` of each image are taken first with duplicate
    songs dropped; any shortfall is filled from image 1's deeper ranks, then
    image 2's, and so on.
    """
    out = RecommendationList()
    seen = set()

    def take(rank, image_id, song, dist):
        if song in seen or len(out) >= final_k:
            return
        seen.add(song)
        out.append(Recommendation(song, dist, image_id, rank))

    for rank, (image_id, songs) in enumerate(per_image, start=1):
        for song, dist in songs[:songs_per_image]:
            take(rank, image_id, song, dist)
    for rank, (image_id, songs) in enumerate(per_image, start=1):
        if len(out) >= final_k:
            break
        for song, dist in songs[songs_per_image:]:
            take(rank, image_id, song, dist)
    return out


class Recommender:
    """``recommend`` with the song index built once per model."""

    def __init__(self, store: FeatureStore, model: EmbeddingModel, config: RetrievalConfig | None = None):
        if len(store) == 0:
            raise InvalidInputError("feature store is empty")
        self.store = store
        self.config = config or RetrievalConfig()
        self.songs = _SongIndex(model)
        if not self.songs.song_ids:
            raise InvalidInputError("model has no song vertices")

    def __call__(self, query_feature) -> RecommendationList:
        cfg = self.config
        images = nearest_images(query_feature, self.store, cfg.n_images)
        per_image = [(img, self.songs.for_image(img, None)) for img, _ in images]
        return fuse(per_image, cfg.songs_per_image, cfg.final_k)


def recommend(query_feature, store: FeatureStore, model: EmbeddingModel, config: RetrievalConfig | None = None) -> RecommendationList:
    return Recommender(store, model, config)(query_feature)

"""Clustered synthetic corpus standing in for a real song/image collection."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .evaluation import (
    GroundTruth,
    Query,
    parse_expansion_rows,
    save_expansions,
    save_popularity,
    save_query_rows,
)
from .features import FeatureStore, save_features
from .graph import TripartiteGraph, VertexKind, build_graph, save_lyrics, save_manifest

FILLER = ("la", "oh", "yeah", "baby", "tonight", "dance", "heart", "away")

FILES = {
    "lyrics": "lyrics.tsv",
    "keywords": "keywords.txt",
    "manifest": "images.tsv",
    "features": "features.txt",
    "queries": "queries.tsv",
    "expansions": "expansions.tsv",
    "popularity": "popularity.tsv",
}


@dataclass
class SyntheticCorpus:
    graph: TripartiteGraph
    features: FeatureStore
    queries: list[Query]
    ground_truth: GroundTruth
    popularity: dict[str, int]
    lyrics: dict[str, list[str]]
    keywords: list[str]
    manifest: list[tuple[str, str, float]]
    expansion_rows: list[tuple[str, list[str]]]
    song_cluster: dict[str, int]
    image_cluster: dict[str, int]

    def write(self, directory) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {name: d / fname for name, fname in FILES.items()}
        save_lyrics(self.lyrics, paths["lyrics"])
        paths["keywords"].write_text("".join(k + "\n" for k in self.keywords), encoding="utf-8")
        save_manifest(self.manifest, paths["manifest"])
        save_features(self.features, paths["features"])
        save_query_rows([(q.image_id, q.keyword) for q in self.queries], paths["queries"])
        save_expansions(self.expansion_rows, paths["expansions"])
        save_popularity(self.popularity, paths["popularity"])
        return paths


def generate_synthetic_corpus(
    clusters: int,
    songs_per_cluster: int,
    images_per_cluster: int,
    keywords_per_cluster: int,
    seed: int = 42,
    feature_dim: int = 32,
    noise: float = 0.1,
) -> SyntheticCorpus:
    """Build a corpus in which every cluster owns its keywords.

    Each song and image links (weight 1) to one to three keywords of its own
    cluster. Image features are the cluster centroid plus Gaussian noise of
    scale ``noise``. A keyword's expansion lists the other keywords of its
    cluster, so relevance means "same cluster". Play counts are independent
    of clusters.
    """
    for name, value in [
        ("clusters", clusters),
        ("songs_per_cluster", songs_per_cluster),
        ("images_per_cluster", images_per_cluster),
        ("keywords_per_cluster", keywords_per_cluster),
        ("feature_dim", feature_dim),
    ]:
        if value < 1:
            raise InvalidInputError(f"{name} must be >= 1, got {value}")
    if noise < 0:
        raise InvalidInputError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    max_links = min(3, keywords_per_cluster)

    cluster_kws = [[f"kw{c}_{j}" for j in range(keywords_per_cluster)] for c in range(clusters)]
    keywords = [k for kws in cluster_kws for k in kws]
    centroids = rng.normal(size=(clusters, feature_dim))

    def pick_keywords(c):
        n = int(rng.integers(1, max_links + 1))
        idx = rng.choice(keywords_per_cluster, size=n, replace=False)
        return [cluster_kws[c][i] for i in sorted(idx)]

    lyrics, song_cluster = {}, {}
    for c in range(clusters):
        for i in range(songs_per_cluster):
            song = f"song{c}_{i}"
            tokens = pick_keywords(c) + list(rng.choice(FILLER, size=int(rng.integers(0, 4))))
            lyrics[song] = [str(t) for t in rng.permutation(tokens)]
            song_cluster[song] = c

    manifest, image_cluster = [], {}
    store = FeatureStore(feature_dim)
    query_rows = []
    for c in range(clusters):
        for i in range(images_per_cluster):
            image = f"img{c}_{i}"
            kws = pick_keywords(c)
            manifest.extend((image, k, 1.0) for k in kws)
            image_cluster[image] = c
            store.add(image, centroids[c] + noise * rng.normal(size=feature_dim))
            query_rows.append((image, kws[0]))

    expansion_rows = [
        (k, [o for o in kws if o != k]) for kws in cluster_kws for k in kws
    ]
    depth = keywords_per_cluster - 1
    ground_truth = GroundTruth(
        parse_expansion_rows(expansion_rows, depth),
        {s: frozenset(t) for s, t in lyrics.items()},
        depth,
    )
    popularity = {s: int(rng.integers(0, 100_000)) for s in lyrics}
    graph = build_graph(lyrics, keywords, manifest)
    queries = [Query(img, kw, store[img]) for img, kw in query_rows]
    return SyntheticCorpus(
        graph, store, queries, ground_truth, popularity, lyrics, keywords,
        manifest, expansion_rows, song_cluster, image_cluster,
    )


def cluster_separation(model, song_cluster, image_cluster) -> tuple[float, float]:
    """Mean image-song vertex-vector distance within and across clusters."""
    songs = list(song_cluster)
    images = list(image_cluster)
    s_vec = np.vstack([model.vector(VertexKind.SONG, s) for s in songs])
    i_vec = np.vstack([model.vector(VertexKind.IMAGE, i) for i in images])
    dist = np.sqrt(((i_vec[:, None, :] - s_vec[None, :, :]) ** 2).sum(axis=2))
    same = np.array([image_cluster[i] for i in images])[:, None] == np.array(
        [song_cluster[s] for s in songs]
    )[None, :]
    return float(dist[same].mean()), float(dist[~same].mean())

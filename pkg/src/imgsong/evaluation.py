"""Ground truth from keyword expansions, ranking metrics and baselines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateKeyError,
    InvalidInputError,
    MissingKeywordError,
    MissingSongError,
    ParseError,
    UnknownVertexError,
)
from .features import FeatureStore
from .graph import TripartiteGraph, VertexKind, _data_lines

POP_POOL = 100


@dataclass
class GroundTruth:
    """keyword -> accepted words, and song -> lyric token set."""

    expansion: dict[str, frozenset]
    song_tokens: dict[str, frozenset]
    n: int = 0

    def expansion_for(self, keyword: str) -> frozenset:
        try:
            return self.expansion[keyword]
        except KeyError:
            raise MissingKeywordError(f"no expansion row for keyword {keyword!r}") from None

    def tokens_for(self, song: str) -> frozenset:
        try:
            return self.song_tokens[song]
        except KeyError:
            raise MissingSongError(f"no lyrics for song {song!r}") from None


def parse_expansion_rows(rows: Iterable[tuple[str, Sequence[str]]], n: int) -> dict[str, frozenset]:
    if n < 0:
        raise InvalidInputError(f"expansion depth must be >= 0, got {n}")
    out = {}
    for keyword, similar in rows:
        out[keyword] = frozenset([keyword, *list(similar)[:n]])
    return out


def read_expansion_rows(path) -> list[tuple[str, list[str]]]:
    rows = []
    for lineno, line in _data_lines(path):
        keyword, _, rest = line.partition("\t")
        keyword = keyword.strip()
        if not keyword:
            raise ParseError("empty keyword", lineno, path)
        words = [w.strip() for w in rest.split(",") if w.strip()]
        rows.append((keyword, words))
    return rows


def load_expansions(path, n: int) -> dict[str, frozenset]:
    """Keep the first ``n`` similar words of each row, plus the keyword itself."""
    return parse_expansion_rows(read_expansion_rows(path), n)


def save_expansions(rows: Iterable[tuple[str, Sequence[str]]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for keyword, words in rows:
            fh.write(f"{keyword}\t{','.join(words)}\n")


def is_relevant(song: str, keyword: str, ground_truth: GroundTruth) -> bool:
    return not ground_truth.tokens_for(song).isdisjoint(ground_truth.expansion_for(keyword))


@dataclass(frozen=True)
class Query:
    image_id: str
    keyword: str
    feature: np.ndarray = field(repr=False, compare=False)


def load_query_rows(path) -> list[tuple[str, str]]:
    rows = []
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) < 2 or not fields[0] or not fields[1]:
            raise ParseError("expected image_id<TAB>keyword", lineno, path)
        rows.append((fields[0], fields[1]))
    return rows


def save_query_rows(rows: Iterable[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for image_id, keyword in rows:
            fh.write(f"{image_id}\t{keyword}\n")


def build_query_set(rows: Iterable[tuple[str, str]], store: FeatureStore) -> list[Query]:
    queries = []
    for image_id, keyword in rows:
        if image_id not in store:
            raise InvalidInputError(f"query image {image_id!r} has no features")
        queries.append(Query(image_id, keyword, store[image_id]))
    return queries


def queries_from_graph(graph: TripartiteGraph, store: FeatureStore) -> list[Query]:
    """One query per image vertex with features, labelled with its
    highest-weight keyword (ties: smallest keyword id)."""
    rows = []
    for v in graph.vertices_of(VertexKind.IMAGE):
        nbrs = graph.neighbors(v.id)
        if not nbrs or v.external_id not in store:
            continue
        best = min(nbrs, key=lambda k: (-nbrs[k], graph.vertices[k].external_id))
        rows.append((v.external_id, graph.vertices[best].external_id))
    return build_query_set(rows, store)


def load_popularity(path) -> dict[str, int]:
    table = {}
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError("expected song_id<TAB>play_count", lineno, path)
        try:
            count = int(fields[1])
        except ValueError:
            raise ParseError(f"play count {fields[1]!r} is not an integer", lineno, path) from None
        if count < 0:
            raise ParseError("play count must be >= 0", lineno, path)
        if fields[0] in table:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate song {fields[0]!r}")
        table[fields[0]] = count
    return table


def save_popularity(table: Mapping[str, int], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for song, count in table.items():
            fh.write(f"{song}\t{count}\n")


QueryRecommender = Callable[[Query], Sequence[str]]


def hit_rate_at_k(
    queries: Sequence[Query],
    recommender: QueryRecommender,
    ground_truth: GroundTruth,
    k: int,
    per_song: bool = False,
) -> float:
    """Fraction of queries whose top-k list holds at least one relevant song.

    With ``per_song=True`` the fraction of relevant songs among all
    recommended songs (pooled over queries) is returned instead.
    """
    return hit_rate_curve(queries, recommender, ground_truth, [k], per_song)[0]


def hit_rate_curve(queries, recommender, ground_truth, ks: Sequence[int], per_song=False) -> list[float]:
    """``hit_rate_at_k`` for several k from a single pass of the recommender."""
    if not queries:
        raise InvalidInputError("query set is empty")
    if not ks or min(ks) < 1:
        raise InvalidInputError("k must be >= 1")
    kmax = max(ks)
    hits = np.zeros(len(ks))
    relevant = np.zeros(len(ks))
    shown = np.zeros(len(ks))
    for q in queries:
        songs = list(recommender(q))[:kmax]
        labels = np.array([is_relevant(s, q.keyword, ground_truth) for s in songs], dtype=bool)
        for i, k in enumerate(ks):
            top = labels[:k]
            hits[i] += bool(top.any())
            relevant[i] += top.sum()
            shown[i] += top.size
    if per_song:
        return [float(r / s) if s else 0.0 for r, s in zip(relevant, shown)]
    return [float(h / len(queries)) for h in hits]


def precision_at_k(lists: Sequence[Sequence[bool]], k: int) -> float:
    """Mean over queries of (relevant items in the top k) / k."""
    if k <= 0:
        raise InvalidInputError(f"k must be positive, got {k}")
    if not lists:
        raise InvalidInputError("no relevance lists given")
    total = 0.0
    for labels in lists:
        if len(labels) == 0:
            raise InvalidInputError("each relevance list needs at least one labelled item")
        total += sum(bool(x) for x in list(labels)[:k]) / k
    return total / len(lists)


def km_baseline(keyword: str, graph: TripartiteGraph, k: int) -> list[str]:
    """Keyword matching: songs adjacent to the keyword, heaviest edges first."""
    if not graph.has_vertex(VertexKind.KEYWORD, keyword):
        raise UnknownVertexError(f"unknown keyword {keyword!r}")
    kid = graph.vertex_id(VertexKind.KEYWORD, keyword)
    songs = [
        (graph.vertices[n].external_id, w)
        for n, w in graph.neighbors(kid).items()
        if graph.vertices[n].kind is VertexKind.SONG
    ]
    songs.sort(key=lambda sw: (-sw[1], sw[0]))
    return [s for s, _ in songs[:k]]


def top_popular(popularity: Mapping[str, int], pool: int = POP_POOL) -> list[str]:
    ranked = sorted(popularity.items(), key=lambda kv: (-kv[1], kv[0]))
    return [s for s, _ in ranked[:pool]]


def pop_baseline(popularity: Mapping[str, int], k: int, seed, pool: int = POP_POOL) -> list[str]:
    """``k`` songs drawn uniformly without replacement from the ``pool`` most
    played. ``seed`` may be an int or a ``numpy.random.Generator``."""
    if not popularity:
        raise InvalidInputError("popularity table is empty")
    top = top_popular(popularity, pool)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    picks = rng.choice(len(top), size=min(k, len(top)), replace=False)
    return [top[i] for i in picks]


def pop_recommender(popularity: Mapping[str, int], k: int, seed: int) -> QueryRecommender:
    """Fresh random draw per query from one seeded stream."""
    rng = np.random.default_rng(seed)
    return lambda q: pop_baseline(popularity, k, rng)


def km_recommender(graph: TripartiteGraph, k: int) -> QueryRecommender:
    return lambda q: km_baseline(q.keyword, graph, k)


def cascade_recommender(recommender) -> QueryRecommender:
    """Adapt a ``retrieval.Recommender`` to the query-level interface."""
    return lambda q: recommender(q.feature).song_ids

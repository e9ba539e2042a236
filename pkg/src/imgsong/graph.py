"""Heterogeneous tripartite network of images, keywords and songs.

Only two edge types exist: song-keyword (weighted by keyword occurrence in the
lyrics) and image-keyword (weighted by relevance, 1.0 by default).
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidInputError,
    InvalidWeightError,
    KindViolationError,
    ParseError,
    UnknownVertexError,
    UnresolvedReferenceError,
)


class VertexKind(enum.Enum):
    IMAGE = "image"
    KEYWORD = "keyword"
    SONG = "song"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "VertexKind":
        return _KINDS_BY_CODE[code]

    @classmethod
    def parse(cls, text: str) -> "VertexKind":
        try:
            return cls(text)
        except ValueError:
            raise InvalidInputError(f"unknown vertex kind {text!r}") from None


_KIND_CODES = {VertexKind.IMAGE: 0, VertexKind.KEYWORD: 1, VertexKind.SONG: 2}
_KINDS_BY_CODE = {v: k for k, v in _KIND_CODES.items()}

ALLOWED_PAIRS = frozenset(
    {
        frozenset({VertexKind.SONG, VertexKind.KEYWORD}),
        frozenset({VertexKind.IMAGE, VertexKind.KEYWORD}),
    }
)


@dataclass(frozen=True)
class Vertex:
    id: int
    kind: VertexKind
    external_id: str

    @property
    def label(self) -> str:
        return f"{self.kind.value}:{self.external_id}"


@dataclass
class Edge:
    a: int
    b: int
    weight: float


def _check_weight(weight) -> float:
    try:
        w = float(weight)
    except (TypeError, ValueError):
        raise InvalidWeightError(f"weight {weight!r} is not a number") from None
    if not math.isfinite(w) or w <= 0.0:
        raise InvalidWeightError(f"weight must be positive and finite, got {w!r}")
    return w


class TripartiteGraph:
    """Undirected weighted graph with typed vertices.

    Vertex ids are dense and assigned in insertion order. Adding an edge twice
    accumulates its weight.
    """

    def __init__(self):
        self.vertices: list[Vertex] = []
        self.edges: list[Edge] = []
        self._index: dict[tuple[VertexKind, str], int] = {}
        self._edge_index: dict[tuple[int, int], int] = {}
        self._adj: list[dict[int, float]] = []
        self._degree: list[float] = []

    def __repr__(self):
        return f"TripartiteGraph(vertices={self.num_vertices}, edges={self.num_edges})"

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def add_vertex(self, kind: VertexKind, external_id: str) -> int:
        if not isinstance(kind, VertexKind):
            raise InvalidInputError(f"kind must be a VertexKind, got {kind!r}")
        if not external_id:
            raise InvalidInputError("external_id must be nonempty")
        key = (kind, external_id)
        vid = self._index.get(key)
        if vid is not None:
            return vid
        vid = len(self.vertices)
        self.vertices.append(Vertex(vid, kind, external_id))
        self._index[key] = vid
        self._adj.append({})
        self._degree.append(0.0)
        return vid

    def vertex_id(self, kind: VertexKind, external_id: str) -> int:
        try:
            return self._index[(kind, external_id)]
        except KeyError:
            raise UnknownVertexError(f"no {kind.value} vertex {external_id!r}") from None

    def has_vertex(self, kind: VertexKind, external_id: str) -> bool:
        return (kind, external_id) in self._index

    def vertex(self, vid: int) -> Vertex:
        if not 0 <= vid < len(self.vertices):
            raise UnknownVertexError(f"vertex id {vid} out of range")
        return self.vertices[vid]

    def vertices_of(self, kind: VertexKind) -> list[Vertex]:
        return [v for v in self.vertices if v.kind is kind]

    def add_edge(self, a: int, b: int, weight: float) -> int:
        """Add (or accumulate onto) the undirected edge a-b; returns the edge index."""
        va, vb = self.vertex(a), self.vertex(b)
        if frozenset({va.kind, vb.kind}) not in ALLOWED_PAIRS:
            raise KindViolationError(
                f"edge {va.label} - {vb.label} is not song-keyword or image-keyword"
            )
        w = _check_weight(weight)
        key = (a, b) if a < b else (b, a)
        idx = self._edge_index.get(key)
        if idx is None:
            idx = len(self.edges)
            self.edges.append(Edge(a, b, w))
            self._edge_index[key] = idx
        else:
            self.edges[idx].weight += w
        self._adj[a][b] = self._adj[a].get(b, 0.0) + w
        self._adj[b][a] = self._adj[b].get(a, 0.0) + w
        self._degree[a] += w
        self._degree[b] += w
        return idx

    def edge_weight(self, a: int, b: int) -> float:
        return self._adj[a].get(b, 0.0)

    def neighbors(self, vid: int) -> dict[int, float]:
        return dict(self._adj[vid])

    def degree(self, vid: int) -> float:
        return self._degree[vid]

    def degrees(self) -> np.ndarray:
        return np.asarray(self._degree, dtype=np.float64)

    def recomputed_degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vertices)
        for e in self.edges:
            deg[e.a] += e.weight
            deg[e.b] += e.weight
        return deg

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Endpoints and weights as parallel arrays, in edge insertion order."""
        src = np.fromiter((e.a for e in self.edges), dtype=np.int64, count=self.num_edges)
        dst = np.fromiter((e.b for e in self.edges), dtype=np.int64, count=self.num_edges)
        w = np.fromiter((e.weight for e in self.edges), dtype=np.float64, count=self.num_edges)
        return src, dst, w

    def kind_codes(self) -> np.ndarray:
        return np.fromiter(
            (v.kind.code for v in self.vertices), dtype=np.int64, count=self.num_vertices
        )

    def counts(self) -> dict[str, int]:
        """Vertex counts per kind plus edge counts per edge type."""
        out = {f"{k.value}_vertices": 0 for k in VertexKind}
        for v in self.vertices:
            out[f"{v.kind.value}_vertices"] += 1
        out["song_keyword_edges"] = 0
        out["image_keyword_edges"] = 0
        for e in self.edges:
            kinds = {self.vertices[e.a].kind, self.vertices[e.b].kind}
            if VertexKind.SONG in kinds:
                out["song_keyword_edges"] += 1
            else:
                out["image_keyword_edges"] += 1
        return out


def build_song_keyword_edges(
    lyrics: Mapping[str, Sequence[str]],
    keywords: Iterable[str],
    graph: TripartiteGraph | None = None,
) -> list[Edge]:
    """Connect each song to the keywords occurring in its token list.

    The edge weight is the number of exact token matches. Songs with no
    matching keyword are left out of the graph entirely. Every keyword gets a
    vertex, even if no song mentions it.
    """
    keywords = list(dict.fromkeys(keywords))
    if not keywords:
        raise InvalidInputError("keyword set is empty")
    if graph is None:
        graph = TripartiteGraph()
    kw_ids = {k: graph.add_vertex(VertexKind.KEYWORD, k) for k in keywords}
    added = []
    for song, tokens in lyrics.items():
        counts = Counter(t for t in tokens if t in kw_ids)
        if not counts:
            continue
        sid = graph.add_vertex(VertexKind.SONG, song)
        for kw in keywords:
            c = counts.get(kw, 0)
            if c:
                idx = graph.add_edge(sid, kw_ids[kw], float(c))
                added.append(graph.edges[idx])
    return added


def build_image_keyword_edges(
    manifest: Iterable[tuple],
    graph: TripartiteGraph,
) -> list[Edge]:
    """One edge per manifest row ``(image, keyword[, relevance])``.

    Keywords must already be vertices of ``graph``.
    """
    added = []
    for row in manifest:
        if len(row) == 2:
            image, keyword = row
            relevance = 1.0
        elif len(row) == 3:
            image, keyword, relevance = row
            if relevance is None:
                relevance = 1.0
        else:
            raise InvalidInputError(f"manifest row must have 2 or 3 fields: {row!r}")
        if not graph.has_vertex(VertexKind.KEYWORD, keyword):
            raise UnresolvedReferenceError(f"image {image!r} references unknown keyword {keyword!r}")
        kid = graph.vertex_id(VertexKind.KEYWORD, keyword)
        iid = graph.add_vertex(VertexKind.IMAGE, image)
        idx = graph.add_edge(iid, kid, relevance)
        added.append(graph.edges[idx])
    return added


def build_graph(lyrics, keywords, manifest=()) -> TripartiteGraph:
    graph = TripartiteGraph()
    build_song_keyword_edges(lyrics, keywords, graph)
    build_image_keyword_edges(manifest, graph)
    return graph


# ---------------------------------------------------------------------------
# File formats


def _data_lines(path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line


def format_weight(w: float) -> str:
    return "%.17g" % w


def save_edges(graph: TripartiteGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in graph.edges:
            va, vb = graph.vertices[e.a], graph.vertices[e.b]
            fh.write(
                f"{va.kind.value}\t{va.external_id}\t{vb.kind.value}\t"
                f"{vb.external_id}\t{format_weight(e.weight)}\n"
            )


def load_edges(path) -> TripartiteGraph:
    graph = TripartiteGraph()
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) != 5:
            raise ParseError(f"expected 5 tab-separated fields, got {len(fields)}", lineno, path)
        sk, sid, dk, did, w = fields
        try:
            src_kind, dst_kind = VertexKind(sk), VertexKind(dk)
        except ValueError:
            raise ParseError(f"unknown vertex kind in {sk!r}/{dk!r}", lineno, path) from None
        if not sid or not did:
            raise ParseError("empty vertex id", lineno, path)
        try:
            weight = float(w)
        except ValueError:
            raise ParseError(f"weight {w!r} is not a number", lineno, path) from None
        if frozenset({src_kind, dst_kind}) not in ALLOWED_PAIRS:
            raise KindViolationError(f"forbidden edge kinds {sk}-{dk} in {path}", lineno)
        try:
            graph.add_edge(
                graph.add_vertex(src_kind, sid), graph.add_vertex(dst_kind, did), weight
            )
        except InvalidWeightError as exc:
            raise ParseError(str(exc), lineno, path) from None
    return graph


def load_lyrics(path) -> dict[str, list[str]]:
    """``song_id<TAB>token token ...``; a song id with no tokens maps to []."""
    lyrics: dict[str, list[str]] = {}
    for lineno, line in _data_lines(path):
        song, sep, rest = line.partition("\t")
        if not song or not sep:
            raise ParseError("expected song_id<TAB>tokens", lineno, path)
        lyrics.setdefault(song, []).extend(rest.split())
    return lyrics


def save_lyrics(lyrics: Mapping[str, Sequence[str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for song, tokens in lyrics.items():
            fh.write(f"{song}\t{' '.join(tokens)}\n")


def load_keywords(path) -> list[str]:
    """One keyword per line (first tab-separated field)."""
    out = []
    for _, line in _data_lines(path):
        kw = line.split("\t")[0].strip()
        if kw:
            out.append(kw)
    return out


def _manifest_rows(path) -> Iterator[tuple[int, tuple[str, str, float]]]:
    for lineno, line in _data_lines(path):
        fields = line.split("\t")
        if len(fields) not in (2, 3) or not fields[0] or not fields[1]:
            raise ParseError("expected image_id<TAB>keyword[<TAB>relevance]", lineno, path)
        rel = 1.0
        if len(fields) == 3 and fields[2].strip():
            try:
                rel = float(fields[2])
            except ValueError:
                raise ParseError(f"relevance {fields[2]!r} is not a number", lineno, path) from None
        yield lineno, (fields[0], fields[1], rel)


def load_manifest(path) -> list[tuple[str, str, float]]:
    return [row for _, row in _manifest_rows(path)]


def save_manifest(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for image, keyword, rel in rows:
            fh.write(f"{image}\t{keyword}\t{format_weight(rel)}\n")


def build_graph_from_files(lyrics_path, keywords_path, manifest_path=None) -> TripartiteGraph:
    graph = TripartiteGraph()
    build_song_keyword_edges(load_lyrics(lyrics_path), load_keywords(keywords_path), graph)
    if manifest_path is not None:
        for lineno, row in _manifest_rows(manifest_path):
            try:
                build_image_keyword_edges([row], graph)
            except UnresolvedReferenceError as exc:
                raise UnresolvedReferenceError(f"{manifest_path}:{lineno}: {exc}") from None
            except InvalidWeightError as exc:
                raise ParseError(str(exc), lineno, manifest_path) from None
    return graph


def song_tokens_from_graph(graph: TripartiteGraph) -> dict[str, frozenset]:
    """Token sets inferred from adjacency, for when no lyrics file is at hand."""
    out = {}
    for v in graph.vertices_of(VertexKind.SONG):
        out[v.external_id] = frozenset(graph.vertices[n].external_id for n in graph.neighbors(v.id))
    return out

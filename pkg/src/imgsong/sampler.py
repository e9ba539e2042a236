"""Alias tables, degree-based noise distributions and edge sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySupportError, InvalidInputError
from .graph import TripartiteGraph, VertexKind

DEFAULT_NOISE_EXPONENT = 0.75


@dataclass(frozen=True)
class AliasTable:
    """Walker/Vose alias table.

    Column ``i`` is kept with probability ``prob[i]``, otherwise ``alias[i]``
    is returned.
    """

    prob: np.ndarray
    alias: np.ndarray

    @property
    def n(self) -> int:
        return len(self.prob)

    def effective_probabilities(self) -> np.ndarray:
        """Exact sampling distribution induced by the table."""
        n = self.n
        out = self.prob.astype(np.float64).copy()
        np.add.at(out, self.alias, 1.0 - self.prob)
        return out / n

    def sample(self, rng: np.random.Generator) -> int:
        return sample_alias(self, rng)

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        col = rng.integers(0, self.n, size=size)
        keep = rng.random(size) < self.prob[col]
        return np.where(keep, col, self.alias[col])


def build_alias_table(weights) -> AliasTable:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise InvalidInputError("cannot build an alias table from no weights")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidInputError("alias weights must be positive and finite")
    n = w.size
    scaled = w * (n / w.sum())
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    # leftovers are 1 up to rounding; their alias stays themselves
    return AliasTable(prob=prob, alias=alias)


def sample_alias(table: AliasTable, rng: np.random.Generator) -> int:
    col = int(rng.integers(0, table.n))
    if rng.random() < table.prob[col]:
        return col
    return int(table.alias[col])


@dataclass(frozen=True)
class NoiseDistribution:
    """P(v) proportional to degree(v)**exponent over vertices of one kind."""

    kind: VertexKind
    exponent: float
    vertex_ids: np.ndarray
    table: AliasTable

    def probabilities(self, num_vertices: int) -> np.ndarray:
        """Dense probability vector over all vertex ids of the graph."""
        out = np.zeros(num_vertices)
        out[self.vertex_ids] = self.table.effective_probabilities()
        return out

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.vertex_ids[sample_alias(self.table, rng)])


def build_noise_distribution(
    graph: TripartiteGraph, kind: VertexKind, exponent: float = DEFAULT_NOISE_EXPONENT
) -> NoiseDistribution:
    deg = graph.degrees()
    ids = np.array(
        [v.id for v in graph.vertices if v.kind is kind and deg[v.id] > 0], dtype=np.int64
    )
    if ids.size == 0:
        raise EmptySupportError(f"no {kind.value} vertex with positive degree")
    weights = np.power(deg[ids], float(exponent))
    return NoiseDistribution(kind, float(exponent), ids, build_alias_table(weights))


class EdgeSampler:
    """Draws directed edges: an undirected edge with probability proportional
    to its weight, then one of its two orientations with probability 1/2."""

    def __init__(self, graph: TripartiteGraph):
        if graph.num_edges == 0:
            raise EmptySupportError("graph has no edges to sample")
        self.src, self.dst, self.weights = graph.edge_arrays()
        self.table = build_alias_table(self.weights)

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        e = sample_alias(self.table, rng)
        a, b = int(self.src[e]), int(self.dst[e])
        if rng.random() < 0.5:
            return a, b
        return b, a

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, 2) array of directed edges."""
        e = self.table.sample_many(rng, size)
        flip = rng.random(size) >= 0.5
        a, b = self.src[e], self.dst[e]
        return np.column_stack([np.where(flip, b, a), np.where(flip, a, b)])


def sample_edge(sampler: EdgeSampler | TripartiteGraph, rng: np.random.Generator) -> tuple[int, int]:
    if isinstance(sampler, TripartiteGraph):
        sampler = EdgeSampler(sampler)
    return sampler.sample(rng)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from imgsong.errors import EmptySupportError, InvalidInputError
from imgsong.graph import TripartiteGraph, VertexKind
from imgsong.sampler import (
    EdgeSampler,
    build_alias_table,
    build_noise_distribution,
    sample_alias,
    sample_edge,
)

DRAWS = 1_000_000


def freqs(table, seed=0, n=DRAWS):
    draws = table.sample_many(np.random.default_rng(seed), n)
    return np.bincount(draws, minlength=table.n) / n


class TestAliasTable:
    def test_singleton(self):
        t = build_alias_table([1.0])
        rng = np.random.default_rng(3)
        assert all(sample_alias(t, rng) == 0 for _ in range(100))
        assert set(t.sample_many(rng, 1000)) == {0}

    def test_uniform(self):
        f = freqs(build_alias_table([1, 1, 1, 1]))
        assert np.all((f >= 0.2475) & (f <= 0.2525))

    def test_one_three(self):
        t = build_alias_table([1, 3])
        np.testing.assert_allclose(t.effective_probabilities(), [0.25, 0.75], atol=1e-12)
        f = freqs(t)
        sigma = math.sqrt(0.25 * 0.75 / DRAWS)
        assert abs(f[0] - 0.25) < 3 * sigma

    @pytest.mark.parametrize("bad", [[], [1, 0], [1, -2], [1, math.nan], [math.inf]])
    def test_invalid(self, bad):
        with pytest.raises(InvalidInputError):
            build_alias_table(bad)

    def test_determinism(self):
        t = build_alias_table([0.2, 5, 1, 1])
        a = [sample_alias(t, r) for r in [np.random.default_rng(11)] for _ in range(500)]
        b = [sample_alias(t, r) for r in [np.random.default_rng(11)] for _ in range(500)]
        assert a == b
        assert all(0 <= x < 4 for x in a)

    def test_chi_square_1234(self):
        t = build_alias_table([1, 2, 3, 4])
        counts = np.bincount(t.sample_many(np.random.default_rng(5), DRAWS), minlength=4)
        _, p = chisquare(counts, np.array([0.1, 0.2, 0.3, 0.4]) * DRAWS)
        assert p > 0.001

    def test_scalar_path_chi_square(self):
        t = build_alias_table([1, 2, 3, 4])
        rng = np.random.default_rng(8)
        n = 40_000
        counts = np.bincount([sample_alias(t, rng) for _ in range(n)], minlength=4)
        _, p = chisquare(counts, np.array([0.1, 0.2, 0.3, 0.4]) * n)
        assert p > 0.001


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=100))
def test_alias_construction_is_exact(weights):
    t = build_alias_table(weights)
    w = np.asarray(weights)
    eff = t.effective_probabilities()
    assert len(t.prob) == len(t.alias) == len(weights)
    assert np.all((t.prob >= 0) & (t.prob <= 1))
    assert abs(eff.sum() - 1.0) < 1e-9
    np.testing.assert_allclose(eff, w / w.sum(), rtol=0, atol=1e-12)


def _two_song_graph(d1, d2):
    g = TripartiteGraph()
    k = g.add_vertex(VertexKind.KEYWORD, "k")
    g.add_edge(g.add_vertex(VertexKind.SONG, "a"), k, d1)
    g.add_edge(g.add_vertex(VertexKind.SONG, "b"), k, d2)
    g.add_edge(g.add_vertex(VertexKind.IMAGE, "i"), k, 1.0)
    return g


class TestNoiseDistribution:
    def test_symmetric(self):
        nd = build_noise_distribution(_two_song_graph(1, 1), VertexKind.SONG, 0.75)
        np.testing.assert_allclose(nd.table.effective_probabilities(), [0.5, 0.5], atol=1e-12)

    def test_one_sixteen(self):
        g = _two_song_graph(1, 16)
        nd = build_noise_distribution(g, VertexKind.SONG, 0.75)
        np.testing.assert_allclose(nd.probabilities(g.num_vertices), [0, 1 / 9, 8 / 9, 0], atol=1e-12)

    def test_exponent_zero_uniform(self):
        nd = build_noise_distribution(_two_song_graph(1, 16), VertexKind.SONG, 0.0)
        np.testing.assert_allclose(nd.table.effective_probabilities(), [0.5, 0.5], atol=1e-12)

    def test_other_kinds_have_zero_probability(self, small_graph):
        for kind in VertexKind:
            p = build_noise_distribution(small_graph, kind).probabilities(small_graph.num_vertices)
            for v in small_graph.vertices:
                if v.kind is not kind:
                    assert p[v.id] == 0.0
            assert abs(p.sum() - 1) < 1e-12

    def test_samples_stay_in_kind(self, small_graph):
        nd = build_noise_distribution(small_graph, VertexKind.KEYWORD)
        rng = np.random.default_rng(0)
        assert {small_graph.vertices[nd.sample(rng)].kind for _ in range(200)} == {VertexKind.KEYWORD}

    def test_empty_support(self):
        g = TripartiteGraph()
        g.add_vertex(VertexKind.SONG, "lonely")
        with pytest.raises(EmptySupportError):
            build_noise_distribution(g, VertexKind.SONG)


class TestEdgeSampling:
    def test_single_edge_both_directions(self):
        g = TripartiteGraph()
        u, v = g.add_vertex(VertexKind.SONG, "s"), g.add_vertex(VertexKind.KEYWORD, "k")
        g.add_edge(u, v, 1.0)
        draws = EdgeSampler(g).sample_many(np.random.default_rng(1), DRAWS)
        forward = np.mean(draws[:, 0] == u)
        assert set(map(tuple, np.unique(draws, axis=0))) == {(u, v), (v, u)}
        assert abs(forward - 0.5) < 3 * math.sqrt(0.25 / DRAWS)

    def test_weights_one_nine(self):
        g = TripartiteGraph()
        k = g.add_vertex(VertexKind.KEYWORD, "k")
        a, b = g.add_vertex(VertexKind.SONG, "a"), g.add_vertex(VertexKind.SONG, "b")
        g.add_edge(a, k, 1.0)
        g.add_edge(b, k, 9.0)
        draws = EdgeSampler(g).sample_many(np.random.default_rng(2), DRAWS)
        first = np.mean((draws[:, 0] == a) | (draws[:, 1] == a))
        assert abs(first - 0.1) < 3 * math.sqrt(0.09 / DRAWS)

    def test_scalar_determinism(self, small_graph):
        s = EdgeSampler(small_graph)
        r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
        a = [sample_edge(s, r1) for _ in range(300)]
        assert a == [sample_edge(s, r2) for _ in range(300)]
        for u, v in a:
            assert small_graph.edge_weight(u, v) > 0

    def test_empty_graph(self):
        with pytest.raises(EmptySupportError):
            EdgeSampler(TripartiteGraph())
        with pytest.raises(EmptySupportError):
            sample_edge(TripartiteGraph(), np.random.default_rng(0))

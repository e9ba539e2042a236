import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imgsong import evaluation as ev
from imgsong.errors import InvalidInputError, MissingKeywordError, MissingSongError, ParseError, UnknownVertexError
from imgsong.features import FeatureStore
from imgsong.graph import TripartiteGraph, VertexKind


@pytest.fixture
def exp_file(tmp_path):
    p = tmp_path / "exp.tsv"
    p.write_text("snow\twinter,cold,ice\nsea\twave\n")
    return p


class TestExpansions:
    def test_truncation(self, exp_file):
        assert ev.load_expansions(exp_file, 2)["snow"] == {"snow", "winter", "cold"}

    def test_keyword_only(self, exp_file):
        assert ev.load_expansions(exp_file, 0) == {"snow": {"snow"}, "sea": {"sea"}}

    def test_saturation(self, exp_file):
        assert ev.load_expansions(exp_file, 99)["snow"] == {"snow", "winter", "cold", "ice"}

    def test_missing_keyword_at_eval_time(self, exp_file):
        gt = ev.GroundTruth(ev.load_expansions(exp_file, 1), {"s": frozenset({"x"})})
        with pytest.raises(MissingKeywordError):
            ev.is_relevant("s", "rain", gt)


class TestRelevance:
    def test_examples(self):
        gt = ev.GroundTruth(
            {"snow": frozenset({"snow", "winter", "cold"})},
            {"a": frozenset({"winter", "night"}), "b": frozenset({"rain"})},
        )
        assert ev.is_relevant("a", "snow", gt)
        assert not ev.is_relevant("b", "snow", gt)
        with pytest.raises(MissingSongError):
            ev.is_relevant("zzz", "snow", gt)

    @settings(max_examples=200)
    @given(
        tokens=st.sets(st.sampled_from("abcdefgh"), max_size=5),
        expansion=st.sets(st.sampled_from("abcdefgh"), max_size=5),
    )
    def test_matches_naive_intersection(self, tokens, expansion):
        gt = ev.GroundTruth({"k": frozenset(expansion | {"k"})}, {"s": frozenset(tokens)})
        naive = any(t == w for t in tokens for w in expansion | {"k"})
        assert ev.is_relevant("s", "k", gt) == naive


def _queries(n, keyword="k"):
    return [ev.Query(f"q{i}", keyword, np.zeros(1)) for i in range(n)]


class TestHitRate:
    gt = ev.GroundTruth(
        {"k": frozenset({"k", "good"})},
        {"hit": frozenset({"good"}), "miss": frozenset({"bad"}), "miss2": frozenset({"x"})},
    )

    def test_all_and_none(self):
        assert ev.hit_rate_at_k(_queries(4), lambda q: ["miss", "hit"], self.gt, 10) == 1.0
        assert ev.hit_rate_at_k(_queries(4), lambda q: ["miss", "miss2"], self.gt, 10) == 0.0
        assert ev.hit_rate_at_k(_queries(4), lambda q: [], self.gt, 10) == 0.0

    def test_seven_of_ten(self):
        lists = {f"q{i}": (["miss"] * 3 + ["hit"] if i < 7 else ["miss", "miss2"]) for i in range(10)}
        assert ev.hit_rate_at_k(_queries(10), lambda q: lists[q.image_id], self.gt, 10) == pytest.approx(0.7)

    def test_cutoff(self):
        rec = lambda q: ["miss", "miss2", "hit"]
        assert ev.hit_rate_at_k(_queries(2), rec, self.gt, 2) == 0.0
        assert ev.hit_rate_at_k(_queries(2), rec, self.gt, 3) == 1.0

    def test_per_song(self):
        rec = lambda q: ["miss", "hit", "hit", "miss2"]
        assert ev.hit_rate_at_k(_queries(3), rec, self.gt, 4, per_song=True) == 0.5
        assert ev.hit_rate_at_k(_queries(3), rec, self.gt, 1, per_song=True) == 0.0

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            ev.hit_rate_at_k([], lambda q: [], self.gt, 10)
        with pytest.raises(InvalidInputError):
            ev.hit_rate_at_k(_queries(1), lambda q: [], self.gt, 0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.lists(st.sampled_from(["hit", "miss", "miss2"]), max_size=12), min_size=1, max_size=8))
    def test_monotone_in_k(self, lists):
        rec = lambda q: lists[int(q.image_id[1:])]
        curve = ev.hit_rate_curve(_queries(len(lists)), rec, self.gt, list(range(1, 14)))
        assert all(a <= b for a, b in zip(curve, curve[1:]))
        assert curve == [ev.hit_rate_at_k(_queries(len(lists)), rec, self.gt, k) for k in range(1, 14)]

    def test_full_expansion_gives_one(self):
        rng = np.random.default_rng(0)
        vocab = [f"w{i}" for i in range(30)]
        tokens = {f"s{i}": frozenset(rng.choice(vocab, size=int(rng.integers(1, 5)))) for i in range(40)}
        gt = ev.GroundTruth({"k": frozenset(vocab) | {"k"}}, tokens)
        songs = list(tokens)
        rec = lambda q: list(rng.choice(songs, size=10, replace=False))
        assert ev.hit_rate_at_k(_queries(20), rec, gt, 10) == 1.0


class TestPrecision:
    def test_examples(self):
        assert ev.precision_at_k([[True] * 10], 10) == 1.0
        assert ev.precision_at_k([[True, False] * 5], 10) == 0.5
        lists = [[True] * r + [False] * (10 - r) for r in (8, 6, 7, 7)]
        assert ev.precision_at_k(lists, 10) == pytest.approx(28 / 40)

    def test_errors(self):
        for k in (0, -1):
            with pytest.raises(InvalidInputError):
                ev.precision_at_k([[True]], k)
        with pytest.raises(InvalidInputError):
            ev.precision_at_k([[]], 10)


def _km_graph(weights):
    g = TripartiteGraph()
    k = g.add_vertex(VertexKind.KEYWORD, "snow")
    for song, w in weights.items():
        g.add_edge(g.add_vertex(VertexKind.SONG, song), k, w)
    g.add_edge(g.add_vertex(VertexKind.IMAGE, "img"), k, 4.0)
    return g


class TestKM:
    def test_exhaustion_and_order(self):
        g = _km_graph({"a": 5, "b": 2, "c": 9})
        assert ev.km_baseline("snow", g, 10) == ["c", "a", "b"]
        assert ev.km_baseline("snow", g, 2) == ["c", "a"]

    def test_ties_by_id(self):
        assert ev.km_baseline("snow", _km_graph({"zz": 1, "aa": 1, "mm": 2}), 10) == ["mm", "aa", "zz"]

    def test_unknown(self):
        with pytest.raises(UnknownVertexError):
            ev.km_baseline("rain", _km_graph({"a": 1}), 10)

    def test_random_matches_oracle(self):
        from .conftest import random_graph

        rng = np.random.default_rng(3)
        for _ in range(20):
            g = random_graph(rng, n_songs=15, n_edges=40)
            for kw in g.vertices_of(VertexKind.KEYWORD):
                adj = [
                    (g.vertices[e.a if e.b == kw.id else e.b].external_id, e.weight)
                    for e in g.edges
                    if kw.id in (e.a, e.b) and VertexKind.SONG in (g.vertices[e.a].kind, g.vertices[e.b].kind)
                ]
                oracle = [s for s, _ in sorted(adj, key=lambda t: (-t[1], t[0]))][:5]
                got = ev.km_baseline(kw.external_id, g, 5)
                assert got == oracle
                assert set(got) <= {s for s, _ in adj}


class TestPOP:
    def test_exhaustion_and_determinism(self):
        table = {f"s{i}": i for i in range(5)}
        picks = ev.pop_baseline(table, 10, seed=1)
        assert sorted(picks) == sorted(table)
        assert ev.pop_baseline(table, 10, seed=1) == picks

    def test_only_top_hundred(self):
        rng = np.random.default_rng(0)
        table = {f"s{i:03d}": int(c) for i, c in enumerate(rng.permutation(200))}
        top = set(sorted(table, key=lambda s: -table[s])[:100])
        seen = set()
        gen = np.random.default_rng(42)
        for _ in range(10_000):
            picks = ev.pop_baseline(table, 10, gen)
            assert len(set(picks)) == 10
            seen.update(picks)
        assert seen <= top
        assert len(seen) == 100

    def test_tie_break_at_cutoff(self):
        table = {"b": 5, "a": 5, "c": 9}
        assert ev.top_popular(table, 2) == ["c", "a"]

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            ev.pop_baseline({}, 10, 0)


class TestFiles:
    def test_popularity(self, tmp_path):
        p = tmp_path / "p.tsv"
        ev.save_popularity({"a": 3, "b": 0}, p)
        assert ev.load_popularity(p) == {"a": 3, "b": 0}
        p.write_text("a\t-1\n")
        with pytest.raises(ParseError):
            ev.load_popularity(p)

    def test_queries(self, tmp_path):
        p = tmp_path / "q.tsv"
        ev.save_query_rows([("i1", "snow")], p)
        store = FeatureStore(2, {"i1": (1, 2)})
        qs = ev.build_query_set(ev.load_query_rows(p), store)
        assert [(q.image_id, q.keyword) for q in qs] == [("i1", "snow")]
        with pytest.raises(InvalidInputError):
            ev.build_query_set([("nope", "snow")], store)

    def test_queries_from_graph(self, small_graph):
        store = FeatureStore(1, {"i1": (0,), "i2": (1,)})
        qs = ev.queries_from_graph(small_graph, store)
        assert [(q.image_id, q.keyword) for q in qs] == [("i1", "snow"), ("i2", "sky")]

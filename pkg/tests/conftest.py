import numpy as np
import pytest

from imgsong.embedding import TrainConfig, train
from imgsong.graph import TripartiteGraph, VertexKind, build_graph
from imgsong.synth import generate_synthetic_corpus


@pytest.fixture
def small_graph():
    lyrics = {
        "s1": ["snow", "snow", "sky"],
        "s2": ["sky", "coffee"],
        "s3": ["coffee", "coffee", "coffee", "snow"],
        "s4": ["rain"],
    }
    manifest = [("i1", "snow"), ("i2", "sky", 0.5), ("i3", "coffee")]
    return build_graph(lyrics, ["snow", "sky", "coffee"], manifest)


@pytest.fixture(scope="session")
def synth_corpus():
    return generate_synthetic_corpus(4, 50, 50, 5, seed=42)


@pytest.fixture(scope="session")
def synth_model(synth_corpus):
    return train(synth_corpus.graph, TrainConfig(samples=2_000_000, dim=16, negatives=5, seed=42))


def random_graph(rng, n_songs=8, n_images=6, n_keywords=4, n_edges=30):
    g = TripartiteGraph()
    kws = [g.add_vertex(VertexKind.KEYWORD, f"k{i}") for i in range(n_keywords)]
    others = [g.add_vertex(VertexKind.SONG, f"s{i}") for i in range(n_songs)]
    others += [g.add_vertex(VertexKind.IMAGE, f"i{i}") for i in range(n_images)]
    for _ in range(n_edges):
        g.add_edge(int(rng.choice(others)), int(rng.choice(kws)), float(rng.uniform(0.1, 3.0)))
    return g


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if rep.when == "call" and "criterion" in props:
                rows.append((props["criterion"], outcome, props.get("detail", "")))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, outcome, detail in sorted(rows):
            mark = "PASS" if outcome == "passed" else "FAIL"
            terminalreporter.write_line(f"{mark}  {name}" + (f"  [{detail}]" if detail else ""))

from imgsong.embedding import TrainConfig, train
from imgsong.plotting import plot_embedding, plot_hit_rate_curves


def test_hit_rate_curves_deterministic(tmp_path):
    curves = {"proposed": [0.5, 0.8, 0.9], "pop": [0.1, 0.2, 0.3]}
    plot_hit_rate_curves(curves, [1, 2, 3], tmp_path / "a.png")
    plot_hit_rate_curves(curves, [1, 2, 3], tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes()[:4] == b"\x89PNG"
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_embedding_projection(tmp_path, small_graph):
    m = train(small_graph, TrainConfig(samples=2000, dim=4))
    labels = {v.label: "warm" if v.external_id in ("s3", "coffee", "i3") else "cold" for v in m.vertices}
    plot_embedding(m, tmp_path / "e.svg", labels=labels)
    assert "<svg" in (tmp_path / "e.svg").read_text()

"""Report figures written next to the tab-separated CLI output."""
from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .graph import VertexKind  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    # fixed metadata keeps repeated runs byte-identical
    "svg.hashsalt": "imgsong",
}


def _save(fig, path):
    metadata = {"Date": None} if str(path).endswith((".svg", ".pdf")) else {"Software": None}
    fig.savefig(path, bbox_inches="tight", metadata=metadata)
    plt.close(fig)


def plot_hit_rate_curves(curves: Mapping[str, Sequence[float]], ks: Sequence[int], path, metric="hit rate"):
    """One line per method, hit rate against cut-off k."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, values in curves.items():
            ax.plot(ks, values, marker="o", markersize=3, label=name)
        ax.set_xlabel("k")
        ax.set_ylabel(f"{metric}@k")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.3)
        ax.legend(loc="lower right")
        _save(fig, path)


def plot_embedding(model, path, kinds=None, labels: Mapping[str, object] | None = None):
    """2-D PCA projection of vertex vectors, coloured by ``labels`` (keyed by
    ``kind:external_id``) or by vertex kind."""
    kinds = kinds or (VertexKind.IMAGE, VertexKind.SONG, VertexKind.KEYWORD)
    rows = [v for v in model.vertices if v.kind in kinds]
    x = model.vertex_vectors[[v.id for v in rows]]
    x = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    proj = x @ vt[:2].T if vt.shape[0] >= 2 else np.column_stack([x @ vt[:1].T, np.zeros(len(x))])
    groups = [labels.get(v.label, "?") if labels else v.kind.value for v in rows]
    markers = {VertexKind.IMAGE: "s", VertexKind.SONG: "o", VertexKind.KEYWORD: "^"}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for g in sorted(set(groups), key=str):
            for kind in kinds:
                idx = [i for i, v in enumerate(rows) if groups[i] == g and v.kind is kind]
                if idx:
                    ax.scatter(proj[idx, 0], proj[idx, 1], s=8, marker=markers[kind],
                               label=f"{g} {kind.value}", alpha=0.7)
        ax.set_xlabel("PC 1")
        ax.set_ylabel("PC 2")
        ax.legend(fontsize=6, ncol=2, markerscale=1.5)
        _save(fig, path)

"""Vertex embeddings learned by edge-sampled SGD with negative sampling.

Second-order proximity is the default: the score of a directed pair (u, v) is
the inner product of u's vertex vector with v's context vector. First-order
proximity (vertex vector against vertex vector) is available via
``TrainConfig.order = 1``.
"""
from __future__ import annotations

import logging
import math
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import CorruptModelError, EmptySupportError, InvalidInputError, UnknownVertexError
from .graph import TripartiteGraph, Vertex, VertexKind
from .sampler import DEFAULT_NOISE_EXPONENT, build_alias_table

logger = logging.getLogger(__name__)

SIGMOID_CLAMP = 30.0
LR_FLOOR = 1e-4
NEGATIVE_REDRAWS = 100
MAGIC = b"XMEMBED1"


@dataclass
class TrainConfig:
    samples: int
    dim: int = 128
    negatives: int = 5
    learning_rate: float = 0.025
    noise_exponent: float = DEFAULT_NOISE_EXPONENT
    workers: int = 1
    seed: int = 42
    order: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError(f"dim must be >= 1, got {self.dim}")
        if self.negatives < 1:
            raise InvalidInputError(f"negatives must be >= 1, got {self.negatives}")
        if not self.learning_rate > 0:
            raise InvalidInputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.samples < 1:
            raise InvalidInputError(f"samples must be >= 1, got {self.samples}")
        if self.workers < 1:
            raise InvalidInputError(f"workers must be >= 1, got {self.workers}")
        if self.order not in (1, 2):
            raise InvalidInputError(f"order must be 1 or 2, got {self.order}")


@dataclass
class TrainStats:
    positive_updates: int = 0
    negative_updates: int = 0
    skipped_negatives: int = 0
    seconds: float = 0.0


@dataclass
class EmbeddingModel:
    vertices: list[Vertex]
    vertex_vectors: np.ndarray
    context_vectors: np.ndarray
    stats: TrainStats | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.vertices)
        if self.vertex_vectors.shape != self.context_vectors.shape or self.vertex_vectors.shape[0] != n:
            raise InvalidInputError("vector matrices must both be (num_vertices, dim)")
        self._index = {(v.kind, v.external_id): v.id for v in self.vertices}
        self._kind_ids: dict[VertexKind, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.vertex_vectors.shape[1]

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def vertex_id(self, kind: VertexKind, external_id: str) -> int:
        try:
            return self._index[(kind, external_id)]
        except KeyError:
            raise UnknownVertexError(f"no {kind.value} vertex {external_id!r} in model") from None

    def ids_of_kind(self, kind: VertexKind) -> np.ndarray:
        ids = self._kind_ids.get(kind)
        if ids is None:
            ids = np.array([v.id for v in self.vertices if v.kind is kind], dtype=np.int64)
            self._kind_ids[kind] = ids
        return ids

    def vector(self, kind: VertexKind, external_id: str) -> np.ndarray:
        return self.vertex_vectors[self.vertex_id(kind, external_id)]


def init_model(graph: TripartiteGraph, dim: int, seed: int = 42) -> EmbeddingModel:
    if dim < 1:
        raise InvalidInputError(f"dim must be >= 1, got {dim}")
    if graph.num_vertices == 0:
        raise InvalidInputError("graph has no vertices")
    rng = np.random.default_rng(seed)
    vec = (rng.random((graph.num_vertices, dim)) - 0.5) / dim
    ctx = np.zeros_like(vec)
    return EmbeddingModel(list(graph.vertices), vec, ctx)


def sigmoid(x: float) -> float:
    x = min(max(x, -SIGMOID_CLAMP), SIGMOID_CLAMP)
    return 1.0 / (1.0 + math.exp(-x))


def pair_score(u: int, v: int, model: EmbeddingModel, order: int = 2) -> float:
    target = model.context_vectors if order == 2 else model.vertex_vectors
    return float(np.dot(model.vertex_vectors[u], target[v]))


def edge_loss(s: float, positive: bool) -> float:
    """-log sigmoid(s) for a positive pair, -log sigmoid(-s) for a negative one."""
    return -math.log(sigmoid(s if positive else -s))


def step_gradient(u: int, v: int, positive: bool, model: EmbeddingModel):
    """Gradients of ``edge_loss(pair_score(u, v))`` w.r.t. u's vertex vector
    and v's context vector."""
    s = pair_score(u, v, model)
    g = sigmoid(s) - 1.0 if positive else sigmoid(s)
    return g * model.context_vectors[v], g * model.vertex_vectors[u]


# ---------------------------------------------------------------------------
# SGD kernel. Own splitmix64 stream so each worker thread owns its generator
# and single-worker runs are bit-reproducible.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(inline="always")
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@numba.njit(inline="always")
def _uniform(state):
    return float(_next_u64(state) >> _S11) * _INV53


@numba.njit(inline="always")
def _alias_draw(state, prob, alias, lo, hi):
    n = hi - lo
    col = int(_uniform(state) * n)
    if col >= n:
        col = n - 1
    col += lo
    if _uniform(state) < prob[col]:
        return col - lo
    return alias[col]


@numba.njit(inline="always")
def _sigmoid(x):
    if x > 30.0:
        x = 30.0
    elif x < -30.0:
        x = -30.0
    return 1.0 / (1.0 + np.exp(-x))


@numba.njit(nogil=True, cache=True)
def _sgd_kernel(
    vec, tgt, src, dst, e_prob, e_alias,
    noise_ids, noise_prob, noise_alias, noise_lo, noise_hi, kind_of,
    n_samples, t_offset, t_stride, t_total, negatives, lr0, state, counters,
):
    dim = vec.shape[1]
    err = np.zeros(dim)
    n_edges = src.shape[0]
    lr_min = lr0 * 1e-4
    for i in range(n_samples):
        t = t_offset + i * t_stride
        lr = lr0 * (1.0 - t / t_total)
        if lr < lr_min:
            lr = lr_min
        e = _alias_draw(state, e_prob, e_alias, 0, n_edges)
        if _uniform(state) < 0.5:
            u = src[e]
            v = dst[e]
        else:
            u = dst[e]
            v = src[e]
        for j in range(dim):
            err[j] = 0.0
        kind = kind_of[v]
        lo = noise_lo[kind]
        hi = noise_hi[kind]
        for k in range(negatives + 1):
            if k == 0:
                target = v
                label = 1.0
            else:
                if hi <= lo:
                    counters[2] += 1
                    continue
                target = -1
                for _ in range(100):
                    cand = noise_ids[lo + _alias_draw(state, noise_prob, noise_alias, lo, hi)]
                    if cand != v:
                        target = cand
                        break
                if target < 0:
                    counters[2] += 1
                    continue
                label = 0.0
            s = 0.0
            for j in range(dim):
                s += vec[u, j] * tgt[target, j]
            g = (label - _sigmoid(s)) * lr
            for j in range(dim):
                err[j] += g * tgt[target, j]
            for j in range(dim):
                tgt[target, j] += g * vec[u, j]
            if k == 0:
                counters[0] += 1
            else:
                counters[1] += 1
        for j in range(dim):
            vec[u, j] += err[j]


def _noise_tables(graph: TripartiteGraph, exponent: float):
    """Per-kind alias tables packed into flat arrays with [lo, hi) slices."""
    deg = graph.degrees()
    ids_parts, prob_parts, alias_parts = [], [], []
    lo = np.zeros(3, dtype=np.int64)
    hi = np.zeros(3, dtype=np.int64)
    offset = 0
    for kind in VertexKind:
        ids = np.array(
            [v.id for v in graph.vertices if v.kind is kind and deg[v.id] > 0], dtype=np.int64
        )
        lo[kind.code] = offset
        if ids.size:
            table = build_alias_table(np.power(deg[ids], exponent))
            ids_parts.append(ids)
            prob_parts.append(table.prob)
            alias_parts.append(table.alias)
            offset += ids.size
        hi[kind.code] = offset
    cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dt)
    return (
        cat(ids_parts, np.int64),
        cat(prob_parts, np.float64),
        cat(alias_parts, np.int64),
        lo,
        hi,
    )


def _worker_states(seed: int, workers: int) -> list[np.ndarray]:
    raw = np.random.SeedSequence(seed).generate_state(workers, dtype=np.uint64)
    return [np.array([s], dtype=np.uint64) for s in raw]


def train(graph: TripartiteGraph, config: TrainConfig, model: EmbeddingModel | None = None) -> EmbeddingModel:
    """Run ``config.samples`` edge-sampled SGD steps and return the model.

    Each step draws a directed edge u->v, then applies one positive update
    and ``config.negatives`` negative updates (negatives come from v's kind)
    to u's vertex vector and the targets' context vectors. With several
    workers the threads share the parameter matrices without locking.
    """
    if graph.num_edges == 0:
        raise EmptySupportError("graph has no edges to train on")
    if model is None:
        model = init_model(graph, config.dim, config.seed)
    src, dst, w = graph.edge_arrays()
    e_table = build_alias_table(w)
    noise = _noise_tables(graph, float(config.noise_exponent))
    kind_of = graph.kind_codes()
    vec = model.vertex_vectors
    tgt = vec if config.order == 1 else model.context_vectors

    workers = config.workers
    states = _worker_states(config.seed, workers)
    counters = [np.zeros(3, dtype=np.int64) for _ in range(workers)]
    per_worker = [config.samples // workers + (i < config.samples % workers) for i in range(workers)]

    def run(i):
        _sgd_kernel(
            vec, tgt, src, dst, e_table.prob, e_table.alias, *noise, kind_of,
            per_worker[i], i, workers, float(config.samples), config.negatives,
            float(config.learning_rate), states[i], counters[i],
        )

    logger.info(
        "training: %d vertices, %d edges, T=%d, d=%d, K=%d, workers=%d",
        graph.num_vertices, graph.num_edges, config.samples, config.dim, config.negatives, workers,
    )
    start = time.perf_counter()
    if workers == 1:
        run(0)
    else:
        threads = [threading.Thread(target=run, args=(i,)) for i in range(workers)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    total = np.sum(counters, axis=0)
    model.stats = TrainStats(int(total[0]), int(total[1]), int(total[2]), time.perf_counter() - start)
    logger.info("training done in %.2fs: %s", model.stats.seconds, model.stats)
    return model


def mean_positive_loss(graph: TripartiteGraph, model: EmbeddingModel, order: int = 2) -> float:
    """Mean positive-pair loss over all edges, both orientations averaged."""
    if graph.num_edges == 0:
        raise EmptySupportError("graph has no edges")
    src, dst, _ = graph.edge_arrays()
    tgt = model.context_vectors if order == 2 else model.vertex_vectors
    vec = model.vertex_vectors
    s = np.concatenate([
        np.einsum("ij,ij->i", vec[src], tgt[dst]),
        np.einsum("ij,ij->i", vec[dst], tgt[src]),
    ])
    s = np.clip(s, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return float(np.mean(np.log1p(np.exp(-s))))


# ---------------------------------------------------------------------------
# Persistence


def save_model(model: EmbeddingModel, path, fmt: str | None = None) -> None:
    """Write ``model`` as binary (default) or text (``fmt="text"`` or a
    ``.txt`` suffix). The text format keeps vertex vectors only."""
    if fmt is None:
        fmt = "text" if Path(path).suffix == ".txt" else "binary"
    if fmt == "binary":
        _save_binary(model, path)
    elif fmt == "text":
        _save_text(model, path)
    else:
        raise InvalidInputError(f"unknown model format {fmt!r}")


def _save_binary(model, path):
    n, d = model.vertex_vectors.shape
    parts = [MAGIC, struct.pack("<QQ", n, d)]
    for v in model.vertices:
        raw = v.external_id.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", v.kind.code))
    parts.append(np.ascontiguousarray(model.vertex_vectors, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(model.context_vectors, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def _save_text(model, path):
    n, d = model.vertex_vectors.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{n} {d}\n")
        for v, row in zip(model.vertices, model.vertex_vectors):
            fh.write(v.label + " " + " ".join("%.16e" % x for x in row) + "\n")


def load_model(path) -> EmbeddingModel:
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        return _load_binary(data, path)
    return _load_text(data, path)


def _load_binary(data: bytes, path) -> EmbeddingModel:
    try:
        pos = len(MAGIC)
        n, d = struct.unpack_from("<QQ", data, pos)
        pos += 16
        vertices = []
        for i in range(n):
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + length + 1 > len(data):
                raise CorruptModelError(f"{path}: truncated vertex table")
            ext = data[pos:pos + length].decode("utf-8")
            pos += length
            kind = VertexKind.from_code(data[pos])
            pos += 1
            vertices.append(Vertex(i, kind, ext))
    except (struct.error, UnicodeDecodeError, KeyError) as exc:
        raise CorruptModelError(f"{path}: malformed header or vertex table ({exc})") from None
    need = 2 * n * d * 8
    if len(data) - pos != need:
        raise CorruptModelError(f"{path}: expected {need} bytes of vectors, found {len(data) - pos}")
    mats = np.frombuffer(data, dtype="<f8", count=2 * n * d, offset=pos).astype(np.float64)
    vec = mats[: n * d].reshape(n, d).copy()
    ctx = mats[n * d:].reshape(n, d).copy()
    return EmbeddingModel(vertices, vec, ctx)


def _load_text(data: bytes, path) -> EmbeddingModel:
    try:
        lines = data.decode("utf-8").splitlines()
        n, d = (int(x) for x in lines[0].split())
    except (UnicodeDecodeError, ValueError, IndexError):
        raise CorruptModelError(f"{path}: not a model file (bad magic or header)") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n or d < 1:
        raise CorruptModelError(f"{path}: header declares {n} rows, found {len(body)}")
    vertices = []
    vec = np.zeros((n, d))
    for i, line in enumerate(body):
        fields = line.rsplit(" ", d)
        label = fields[0]
        kind_text, sep, ext = label.partition(":")
        if len(fields) != d + 1 or not sep:
            raise CorruptModelError(f"{path}: line {i + 2}: malformed row")
        try:
            kind = VertexKind(kind_text)
            vec[i] = [float(x) for x in fields[1:]]
        except ValueError:
            raise CorruptModelError(f"{path}: line {i + 2}: malformed row") from None
        vertices.append(Vertex(i, kind, ext))
    return EmbeddingModel(vertices, vec, np.zeros_like(vec))

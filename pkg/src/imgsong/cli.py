"""Command-line entry point: ``imgsong <subcommand> ...``.

Exit codes: 0 success, 1 usage, 2 input/parse error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import urllib.parse
import urllib.request
from pathlib import Path

from . import evaluation as ev
from .embedding import TrainConfig, init_model, load_model, mean_positive_loss, save_model, train
from .errors import ImgSongError, InputError
from .features import extract_directory, load_features, save_features
from .graph import (
    build_graph_from_files,
    load_edges,
    load_keywords,
    load_lyrics,
    save_edges,
    song_tokens_from_graph,
)
from .retrieval import Recommender, RetrievalConfig
from .synth import generate_synthetic_corpus

logger = logging.getLogger("imgsong")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


# ---------------------------------------------------------------------------


def cmd_build_graph(args):
    graph = build_graph_from_files(args.lyrics, args.keywords, args.images)
    save_edges(graph, args.out)
    for name, count in graph.counts().items():
        print(f"{name}\t{count}")
    return EXIT_OK


def cmd_train(args):
    graph = load_edges(args.graph)
    config = TrainConfig(
        samples=args.samples,
        dim=args.dim,
        negatives=args.negatives,
        learning_rate=args.lr,
        noise_exponent=args.noise_exponent,
        workers=args.workers,
        seed=args.seed,
        order=args.order,
    )
    model = init_model(graph, config.dim, config.seed)
    initial = mean_positive_loss(graph, model, config.order)
    train(graph, config, model)
    final = mean_positive_loss(graph, model, config.order)
    save_model(model, args.out, args.format)
    if args.figure:
        from .plotting import plot_embedding

        plot_embedding(model, args.figure)
    print(f"iterations\t{config.samples}")
    print(f"initial_loss\t{initial:.6f}")
    print(f"final_loss\t{final:.6f}")
    return EXIT_OK


def cmd_query(args):
    store = load_features(args.features)
    model = load_model(args.model)
    queries = load_features(args.image_feature_file)
    if queries.dim != store.dim:
        raise InputError(f"query features have {queries.dim} dims, store has {store.dim}")
    rec = Recommender(store, model, RetrievalConfig(args.n_images, args.songs_per_image, args.k))
    many = len(queries) > 1
    for qid, vector in queries.items():
        if many:
            print(f"# query {qid}")
        for rank, r in enumerate(rec(vector), start=1):
            print(f"{rank}\t{r.song_id}\t{r.distance:.9g}\t{r.source_image}")
    return EXIT_OK


def _ground_truth(args, graph):
    expansion = ev.load_expansions(args.expansions, args.n)
    if args.lyrics:
        tokens = {s: frozenset(t) for s, t in load_lyrics(args.lyrics).items()}
    else:
        tokens = song_tokens_from_graph(graph)
    return ev.GroundTruth(expansion, tokens, args.n)


def cmd_evaluate(args):
    graph = load_edges(args.graph)
    store = load_features(args.features)
    gt = _ground_truth(args, graph)
    if args.queries:
        queries = ev.build_query_set(ev.load_query_rows(args.queries), store)
    else:
        queries = ev.queries_from_graph(graph, store)
    popularity = ev.load_popularity(args.popularity) if args.popularity else None

    def method(name):
        if name == "km":
            return ev.km_recommender(graph, args.k)
        if name == "pop":
            if popularity is None:
                raise InputError("--baseline pop needs --popularity")
            return ev.pop_recommender(popularity, args.k, args.seed)
        if args.model is None:
            raise InputError("--model is required unless --baseline is given")
        config = RetrievalConfig(args.n_images, args.songs_per_image, args.k)
        return ev.cascade_recommender(Recommender(store, load_model(args.model), config))

    per_song = args.metric == "per-song"
    name = args.baseline or "proposed"
    value = ev.hit_rate_at_k(queries, method(name), gt, args.k, per_song)
    print(f"hit_rate@{args.k}\t{value:.6f}")

    if args.figure:
        from .plotting import plot_hit_rate_curves

        ks = list(range(1, args.k + 1))
        names = [name]
        for other in ("proposed", "km", "pop"):
            if other in names or (other == "proposed" and args.model is None):
                continue
            if other == "pop" and popularity is None:
                continue
            names.append(other)
        curves = {n: ev.hit_rate_curve(queries, method(n), gt, ks, per_song) for n in names}
        plot_hit_rate_curves(curves, ks, args.figure, metric="per-song hit rate" if per_song else "hit rate")
        table = Path(args.figure).with_suffix(".tsv")
        with open(table, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("k\t" + "\t".join(curves) + "\n")
            for i, k in enumerate(ks):
                fh.write(f"{k}\t" + "\t".join(f"{curves[n][i]:.6f}" for n in curves) + "\n")
        logger.info("wrote %s and %s", args.figure, table)
    return EXIT_OK


def cmd_extract_features(args):
    store = extract_directory(args.images_dir, args.bins)
    save_features(store, args.out)
    print(f"images\t{len(store)}")
    print(f"dim\t{store.dim}")
    return EXIT_OK


def cmd_gen_synth(args):
    corpus = generate_synthetic_corpus(
        args.clusters, args.songs, args.images, args.keywords,
        seed=args.seed, feature_dim=args.feature_dim, noise=args.noise,
    )
    paths = corpus.write(args.out_dir)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    return EXIT_OK


CONCEPTNET_URL = "https://api.conceptnet.io/related/c/{lang}/{term}?filter=/c/{lang}&limit={limit}"


def fetch_related(keyword, lang="en", limit=10, opener=None):
    """Related terms for ``keyword`` from the public ConceptNet API, most
    related first, the keyword itself excluded."""
    term = urllib.parse.quote(keyword.replace(" ", "_"))
    url = CONCEPTNET_URL.format(lang=lang, term=term, limit=limit + 1)
    opener = opener or urllib.request.urlopen
    with opener(url, timeout=30) as resp:
        payload = json.load(resp)
    words = []
    for item in payload.get("related", []):
        word = item["@id"].rstrip("/").split("/")[3].replace("_", " ")
        if word != keyword and word not in words:
            words.append(word)
    return words[:limit]


def cmd_fetch_expansions(args, opener=None):
    cache = Path(args.cache_dir) if args.cache_dir else None
    rows = []
    for kw in load_keywords(args.keywords):
        cached = cache / f"{urllib.parse.quote(kw, safe='')}.json" if cache else None
        if cached is not None and cached.exists():
            words = json.loads(cached.read_text(encoding="utf-8"))
        else:
            words = fetch_related(kw, args.lang, args.limit, opener)
            if cached is not None:
                cache.mkdir(parents=True, exist_ok=True)
                cached.write_text(json.dumps(words, ensure_ascii=False), encoding="utf-8")
        rows.append((kw, words))
    ev.save_expansions(rows, args.out)
    print(f"keywords\t{len(rows)}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imgsong", description="Image-based music recommendation via tripartite network embedding.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("build-graph", help="build the edge TSV from lyrics, keywords and an image manifest")
    s.add_argument("--lyrics", required=True)
    s.add_argument("--keywords", required=True)
    s.add_argument("--images", help="image manifest: image_id<TAB>keyword[<TAB>relevance]")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_build_graph)

    s = sub.add_parser("train", help="learn vertex embeddings")
    s.add_argument("--graph", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--samples", type=_positive_int, required=True, help="total SGD steps T")
    s.add_argument("--dim", type=_positive_int, default=128)
    s.add_argument("--negatives", type=_positive_int, default=5)
    s.add_argument("--lr", type=_positive_float, default=0.025)
    s.add_argument("--noise-exponent", type=float, default=0.75)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--order", type=int, choices=(1, 2), default=2)
    s.add_argument("--format", choices=("binary", "text"), default=None)
    s.add_argument("--figure", help="also write a 2-D PCA plot of the vertex vectors")
    s.add_argument("--seed", type=int, default=42)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("query", help="recommend songs for query image features")
    s.add_argument("--features", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--image-feature-file", required=True)
    s.add_argument("--n-images", type=_positive_int, default=5)
    s.add_argument("--songs-per-image", type=_positive_int, default=2)
    s.add_argument("--k", type=_positive_int, default=10)
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("evaluate", help="hit rate of the cascade or a baseline")
    s.add_argument("--graph", required=True)
    s.add_argument("--model")
    s.add_argument("--features", required=True)
    s.add_argument("--expansions", required=True)
    s.add_argument("--n", type=_nonnegative_int, default=10, help="expansion depth")
    s.add_argument("--k", type=_positive_int, default=10)
    s.add_argument("--baseline", choices=("km", "pop"))
    s.add_argument("--queries", help="image_id<TAB>keyword rows; default: every image with its top keyword")
    s.add_argument("--lyrics", help="song token sets; default: keywords adjacent in the graph")
    s.add_argument("--popularity", help="song_id<TAB>play_count, needed for --baseline pop")
    s.add_argument("--metric", choices=("per-query", "per-song"), default="per-query")
    s.add_argument("--n-images", type=_positive_int, default=5)
    s.add_argument("--songs-per-image", type=_positive_int, default=2)
    s.add_argument("--figure", help="also write a hit-rate@k plot here, plus a .tsv of the curve")
    s.add_argument("--seed", type=int, default=42)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("extract-features", help="colour-histogram features for a directory of PPM images")
    s.add_argument("--images-dir", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--bins", type=_positive_int, default=16)
    s.set_defaults(func=cmd_extract_features)

    s = sub.add_parser("gen-synth", help="write a clustered synthetic corpus")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--clusters", type=_positive_int, default=4)
    s.add_argument("--songs", type=_positive_int, default=50, help="songs per cluster")
    s.add_argument("--images", type=_positive_int, default=50, help="images per cluster")
    s.add_argument("--keywords", type=_positive_int, default=5, help="keywords per cluster")
    s.add_argument("--feature-dim", type=_positive_int, default=32)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=42)
    s.set_defaults(func=cmd_gen_synth)

    s = sub.add_parser("fetch-expansions", help="download related words from ConceptNet (network)")
    s.add_argument("--keywords", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--limit", type=_positive_int, default=10)
    s.add_argument("--lang", default="en")
    s.add_argument("--cache-dir")
    s.set_defaults(func=cmd_fetch_expansions)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"imgsong {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ImgSongError as exc:
        print(f"imgsong {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point for the full pipeline.

Subcommands cover the workflow end to end: ingest dumps into a store,
resolve and label queries, harvest saved anthology pages, chunk and
pseudo-embed documents, assemble dataset manifests, and train/evaluate the
regressor.  Every run logs a provenance header; identical flags and inputs
produce byte-identical outputs.  Exit codes: 0 success, 1 usage error,
2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chunks import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_DIM,
    DEFAULT_OVERLAP,
    ChunkEmbeddings,
    chunk,
    embed_tokens,
    read_embeddings,
    tokenize,
    write_embeddings,
)
from .datasets import (
    DEFAULT_RATIOS,
    cap_chunks,
    corpus_stats,
    load_manifest,
    save_manifest,
    split,
    subsample,
)
from .errors import SchubertError
from .harvest import extract_paper_links, extract_venue_links, write_manifest
from .regressor import (
    TrainConfig,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history,
)
from .resolve import ArticleQuery, find_citations_for_article, label_query_file
from .store import CorpusStore, build_store_from_dumps

log = logging.getLogger("schubert")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _iter_docs(path):
    """Yield (doc_id, text) rows from a docs JSON-lines file."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            yield str(obj["doc_id"]), str(obj.get("text", ""))


def _load_label_map(path) -> dict[str, float]:
    """doc_id -> score from a label JSON-lines file (only status=ok rows)."""
    labels: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("status", "ok") != "ok":
                continue
            doc_id = obj.get("doc_id") or obj.get("article_id")
            score = obj.get("score")
            if doc_id and score is not None:
                labels[str(doc_id)] = float(score)
    return labels


def _select_items(items, manifest, split_name, max_chunks):
    by_id = {item.doc_id: item for item in items}
    wanted = manifest.splits.get(split_name, []) if manifest else [i.doc_id for i in items]
    selected = [by_id[doc_id] for doc_id in wanted if doc_id in by_id]
    cap = max_chunks if max_chunks else (manifest.max_chunks if manifest else None)
    if cap:
        selected = [cap_chunks(item, cap) for item in selected]
    return selected


# --- subcommand handlers ----------------------------------------------------


def _cmd_ingest(args) -> int:
    def on_error(lineno, exc):
        log.warning("skipping malformed line %d: %s", lineno, exc)

    store, count = build_store_from_dumps(
        args.dumps, args.store, on_error=on_error, workers=args.workers
    )
    with store:
        print(
            f"ingested {count} records into {args.store}"
            f" ({store.count_articles()} articles, {store.count_author_rows()} author rows)"
        )
    return EXIT_OK


def _cmd_resolve(args) -> int:
    query = ArticleQuery(title=args.title, authors=args.author)
    with CorpusStore(args.store) as store:
        resolved = find_citations_for_article(store, query)
    if resolved is None:
        print("no match")
        return EXIT_OK
    article_id, grouped = resolved
    payload = {
        "article_id": article_id,
        "by_year": {str(y): ids for y, ids in sorted(grouped.by_year.items())},
        "unknown_year": grouped.unknown_year,
        "dropped": grouped.dropped,
    }
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_label(args) -> int:
    with CorpusStore(args.store) as store:
        diagnostics = label_query_file(
            store, args.queries, args.output,
            max_years=args.max_years, snapshot_year=args.snapshot_year,
        )
    log.info(
        "diagnostics: %d citing ids missing from store, %d without year,"
        " %d citing before publication",
        diagnostics.dropped_missing_from_store,
        diagnostics.citing_without_year,
        diagnostics.citing_before_publication,
    )
    print(f"labels written to {args.output}")
    return EXIT_OK


def _cmd_harvest(args) -> int:
    pages_dir = Path(args.pages)
    pages: list[tuple[Path, str, int]] = []
    skipped = 0
    if args.index:
        index_html = Path(args.index).read_text(encoding="utf-8")
        venue_links, bad_links = extract_venue_links(index_html)
        skipped += bad_links
        for url, venue, year in venue_links:
            slug = url.rstrip("/").rsplit("/", 1)[-1]
            slug = slug.rsplit(".", 1)[0] if "." in slug else slug
            page = pages_dir / f"{slug}.html"
            if page.exists():
                pages.append((page, venue, year))
            else:
                skipped += 1
                log.warning("no saved page for %s (%s %d)", url, venue, year)
    else:
        for page in sorted(pages_dir.glob("*.htm*")):
            parts = page.stem.rsplit("-", 1)
            if len(parts) == 2 and parts[1].isdigit():
                pages.append((page, parts[0].upper(), int(parts[1])))
            else:
                skipped += 1
                log.warning("cannot parse venue/year from filename %s", page.name)

    links = []
    for page, venue, year in pages:
        page_links, bad_lines = extract_paper_links(
            page.read_text(encoding="utf-8"), venue, year
        )
        skipped += bad_lines
        links.extend(page_links)
    count = write_manifest(args.output, links)
    print(f"{count} paper links from {len(pages)} pages ({skipped} entries skipped)")
    return EXIT_OK


def _cmd_chunk(args) -> int:
    with open(args.output, "w", encoding="utf-8") as out:
        n_docs = 0
        for doc_id, text in _iter_docs(args.docs):
            tokens = tokenize(text, source_id=doc_id)
            spans = (
                [[c.start_index, c.end_index] for c in
                 chunk(tokens, args.chunk_size, args.overlap)]
                if len(tokens) else []
            )
            out.write(json.dumps({
                "doc_id": doc_id, "n_tokens": len(tokens), "chunks": spans,
            }) + "\n")
            n_docs += 1
    print(f"chunk listings for {n_docs} documents written to {args.output}")
    return EXIT_OK


def _cmd_embed_pseudo(args) -> int:
    labels = _load_label_map(args.labels) if args.labels else {}

    def embed_one(doc):
        doc_id, text = doc
        tokens = tokenize(text, source_id=doc_id)
        if not len(tokens):
            return None
        return embed_tokens(
            tokens, chunk_size=args.chunk_size, overlap=args.overlap,
            dim=args.dim, label=labels.get(doc_id),
        )

    docs = _iter_docs(args.docs)
    if args.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(args.workers) as pool:
            items = [item for item in pool.map(embed_one, docs) if item is not None]
    else:
        items = [item for item in map(embed_one, docs) if item is not None]
    count = write_embeddings(args.output, items)
    print(f"{count} documents embedded to {args.output}")
    return EXIT_OK


def _cmd_dataset(args) -> int:
    items = read_embeddings(args.embeddings)
    labels = _load_label_map(args.labels) if args.labels else {}
    doc_ids = [
        item.doc_id for item in items
        if item.label is not None or item.doc_id in labels
    ]
    manifest = split(doc_ids, ratios=tuple(args.ratios), seed=args.seed)
    if args.fraction < 1.0:
        manifest = subsample(manifest, args.fraction, seed=args.seed)
    manifest.max_chunks = args.max_chunks
    manifest.mode = args.mode
    save_manifest(args.output, manifest)
    sizes = {name: len(ids) for name, ids in manifest.splits.items()}
    print(f"manifest written to {args.output} with splits {sizes}")
    return EXIT_OK


def _cmd_train(args) -> int:
    items = read_embeddings(args.embeddings)
    manifest = load_manifest(args.manifest) if args.manifest else None
    train_items = _select_items(items, manifest, "train", args.max_chunks)
    val_items = (
        _select_items(items, manifest, "validation", args.max_chunks)
        if manifest else []
    )
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        dropout_p=args.dropout,
        hidden=args.hidden,
        seed=args.seed,
    )
    result = train(train_items, config, val_items=val_items or None)
    save_checkpoint(args.checkpoint, result.params)
    if args.best_checkpoint:
        save_checkpoint(args.best_checkpoint, result.best_params)
    if args.history:
        write_history(args.history, result.history)
    last = result.history[-1] if result.history else None
    if last:
        print(
            f"trained {config.epochs} epochs on {len(train_items)} docs;"
            f" final train MAE {last['train_mae']:.4f}"
            + (f", val MAE {last['val_mae']:.4f}" if last["val_mae"] is not None else "")
        )
    else:
        print(f"no epochs requested; initialization saved to {args.checkpoint}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    items = read_embeddings(args.embeddings)
    manifest = load_manifest(args.manifest) if args.manifest else None
    selected = _select_items(items, manifest, args.split, args.max_chunks)
    unlabeled = sum(1 for item in selected if item.label is None)
    if unlabeled:
        log.warning("skipping %d items without labels", unlabeled)
        selected = [item for item in selected if item.label is not None]
    params = load_checkpoint(args.checkpoint)
    metrics = evaluate(params, selected)
    if args.json:
        print(json.dumps({
            "mse": metrics.mse, "mae": metrics.mae, "r2": metrics.r2, "n": metrics.n,
        }))
    else:
        print(
            f"n={metrics.n}  MSE={metrics.mse:.6f}  MAE={metrics.mae:.6f}"
            f"  R2={metrics.r2:.6f}"
        )
    return EXIT_OK


def _cmd_stats(args) -> int:
    rows = []
    for doc_id, text in _iter_docs(args.docs):
        tokens = tokenize(text, source_id=doc_id)
        n_chunks = len(chunk(tokens, args.chunk_size, args.overlap)) if len(tokens) else 0
        rows.append((doc_id, len(text), n_chunks))
    stats = corpus_stats(rows)
    if args.json:
        print(json.dumps({
            "example_count": stats.example_count,
            "avg_chars": stats.avg_chars,
            "max_chars": stats.max_chars,
            "avg_chunks": stats.avg_chunks,
        }))
    else:
        print(
            f"examples={stats.example_count}  chars avg={stats.avg_chars:.1f}"
            f" max={stats.max_chars}  chunks avg={stats.avg_chunks:.2f}"
        )
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="schubert", description=__doc__)
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="build an article store from JSON-lines dumps")
    p.add_argument("dumps", nargs="+", help="dump files (.jsonl or .jsonl.gz)")
    p.add_argument("--store", required=True, help="output store path")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("resolve", help="match a title+authors query to the store")
    p.add_argument("--store", required=True)
    p.add_argument("--title", required=True)
    p.add_argument("--author", action="append", required=True,
                   help="author name; repeat for multiple candidates")
    p.set_defaults(func=_cmd_resolve)

    p = sub.add_parser("label", help="batch-label a query file with citation scores")
    p.add_argument("--store", required=True)
    p.add_argument("--queries", required=True, help="JSON-lines query file")
    p.add_argument("--output", required=True, help="JSON-lines label file")
    p.add_argument("--max-years", type=int, default=3)
    p.add_argument("--snapshot-year", type=int, required=True)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("harvest", help="extract paper links from saved anthology pages")
    p.add_argument("--pages", required=True, help="directory of saved venue pages")
    p.add_argument("--index", help="optional saved index page listing venues")
    p.add_argument("--output", required=True, help="JSON-lines link manifest")
    p.set_defaults(func=_cmd_harvest)

    p = sub.add_parser("chunk", help="write chunk spans for each document")
    p.add_argument("--docs", required=True, help="JSON-lines {doc_id, text} file")
    p.add_argument("--output", required=True)
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    p.add_argument("--overlap", type=int, default=DEFAULT_OVERLAP)
    p.set_defaults(func=_cmd_chunk)

    p = sub.add_parser("embed-pseudo",
                       help="deterministic pseudo-embeddings for documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--output", required=True, help="embedding container file")
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    p.add_argument("--overlap", type=int, default=DEFAULT_OVERLAP)
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--labels", help="label file to attach scores from")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_embed_pseudo)

    p = sub.add_parser("dataset", help="build a train/validation/test manifest")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", help="label file when the container has no labels")
    p.add_argument("--output", required=True, help="manifest JSON path")
    p.add_argument("--ratios", type=float, nargs=3, default=list(DEFAULT_RATIOS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--max-chunks", type=int)
    p.add_argument("--mode", default="full_text",
                   choices=["full_text", "abstract_only"])
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("train", help="train the GRU regressor on labeled embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", help="dataset manifest; without it all items train")
    p.add_argument("--checkpoint", required=True, help="final-epoch checkpoint path")
    p.add_argument("--best-checkpoint", help="best-validation checkpoint path")
    p.add_argument("--history", help="JSON-lines per-epoch metric file")
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=12)
    p.add_argument("--dropout", type=float, default=0.3)
    p.add_argument("--hidden", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-chunks", type=int)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on labeled embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest")
    p.add_argument("--split", default="test")
    p.add_argument("--max-chunks", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="corpus character/chunk statistics")
    p.add_argument("--docs", required=True)
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    p.add_argument("--overlap", type=int, default=DEFAULT_OVERLAP)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_stats)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    log.info("schubert %s | %s", __version__, flags)

    try:
        return args.func(args)
    except SchubertError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

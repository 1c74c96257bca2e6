"""Command-line interface.

Offline commands (gen-fixtures, ingest, build-index, eval) prepare and score
the knowledge base; `serve` runs the online session API; `query` is a thin
HTTP client for it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import requests

from . import evalkit, fixtures, report
from .config import apply_overrides, load_config
from .corpus import CorpusStore, ingest_file, load_corpus, save_corpus
from .embed import make_embedder
from .errors import MitraError
from .index import build_tiered_indexes, load_tiered, save_tiered
from .pipeline import PipelineConfig, RetrievalPipeline
from .rerank import make_reranker
from .service import serve


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mitra",
        description="Self-hosted retrieval-augmented QA over internal analysis documentation.",
    )
    parser.add_argument("--config", help="path to the JSON config (or set MITRA_CONFIG)")
    parser.add_argument("--k-retrieve", type=int, help="first-stage candidate count")
    parser.add_argument("--k-final", type=int, help="reranked context size")
    parser.add_argument(
        "--stub-models",
        action="store_true",
        help="force embedder, reranker and generator into stub mode",
    )
    commands = parser.add_subparsers(dest="command")

    p = commands.add_parser("gen-fixtures", help="emit the synthetic corpus and gold sets")
    p.add_argument("--out", default="data", help="output directory (default: data)")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--analyses", type=int, default=12)

    p = commands.add_parser("ingest", help="ingest a line-delimited JSON corpus file")
    p.add_argument("corpus_file")

    commands.add_parser("build-index", help="build the abstracts and full-text indexes")

    p = commands.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--listen", help="host:port to bind (overrides config)")

    p = commands.add_parser("eval", help="evaluate dense and BM25 retrieval over gold files")
    p.add_argument("gold_files", nargs="+")
    p.add_argument("--out", help="report output directory (default: <data_dir>/report)")

    p = commands.add_parser("query", help="thin client against a running service")
    p.add_argument("--server", default="http://127.0.0.1:8080")
    p.add_argument("--session", help="existing session id (a new one is created if omitted)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", help="question to send")
    group.add_argument("--confirm", choices=["accept", "reject"], help="answer the pending confirmation")
    group.add_argument("--reset", action="store_true", help="reset the session")
    return parser


def _cmd_gen_fixtures(args: argparse.Namespace) -> int:
    result = fixtures.write_fixtures(args.out, seed=args.seed, n_analyses=args.analyses)
    print(
        f"wrote {result.n_analyses} analyses / {result.n_chunks} chunks to {result.corpus_path}"
    )
    for label, path in sorted(result.gold_paths.items()):
        print(f"wrote {result.n_queries[label]} {label} gold queries to {path}")
    print(f"wrote synonym table to {result.synonym_table_path}")
    print(f"wrote stub-mode config to {result.config_path}")
    return 0


def _cmd_ingest(args: argparse.Namespace, config) -> int:
    if config.corpus_path.exists():
        store = load_corpus(config.corpus_path)
    else:
        store = CorpusStore()
    stats = ingest_file(store, args.corpus_file)
    config.data_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(store, config.corpus_path)
    print(
        f"ingested {stats.analyses} analyses, {stats.documents} documents "
        f"({stats.chunks} chunks, {stats.skipped_stale} stale skipped) -> {config.corpus_path}"
    )
    return 0


def _cmd_build_index(config) -> int:
    store = load_corpus(config.corpus_path)
    embedder = make_embedder(config.embedder)
    tiered = build_tiered_indexes(store, embedder)
    save_tiered(tiered, config.index_dir)
    total = sum(len(ix) for ix in tiered.fulltext.values())
    print(
        f"built abstracts index ({len(tiered.abstracts)} analyses) and "
        f"{len(tiered.fulltext)} full-text indexes ({total} chunks) -> {config.index_dir}"
    )
    return 0


def _cmd_serve(args: argparse.Namespace, config) -> int:
    if args.listen:
        apply_overrides(config, listen=args.listen)
    service = serve(config)
    print(f"listening on {service.base_url}", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
        service.shutdown()
    return 0


def _cmd_eval(args: argparse.Namespace, config) -> int:
    store = load_corpus(config.corpus_path)
    tiered = load_tiered(config.index_dir)
    pipeline = RetrievalPipeline(
        store=store,
        embedder=make_embedder(config.embedder),
        reranker=make_reranker(config.reranker),
        generator=None,  # evaluation never generates
        config=PipelineConfig(k_retrieve=config.k_retrieve, k_final=config.k_final),
    )
    gold: list[evalkit.GoldQuery] = []
    for path in args.gold_files:
        gold.extend(evalkit.load_gold(path))
    result = evalkit.run_eval(store, tiered, evalkit.build_bm25_indexes(store), gold, pipeline)
    out_dir = Path(args.out) if args.out else config.data_dir / "report"
    paths = report.write_report_bundle(result, out_dir)
    print(report.format_tables(result))
    print(f"report bundle written under {out_dir}")
    for name in ("json", "csv", "tables"):
        print(f"  {name}: {paths[name]}")
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    base = args.server.rstrip("/")
    session_id = args.session
    if session_id is None:
        created = requests.post(f"{base}/v1/sessions", timeout=30).json()
        session_id = created["session_id"]
        print(f"session: {session_id}")
    if args.text is not None:
        response = requests.post(
            f"{base}/v1/sessions/{session_id}/query", json={"text": args.text}, timeout=120
        )
    elif args.confirm is not None:
        response = requests.post(
            f"{base}/v1/sessions/{session_id}/confirm",
            json={"accept": args.confirm == "accept"},
            timeout=30,
        )
    else:
        response = requests.post(f"{base}/v1/sessions/{session_id}/reset", timeout=30)
    payload = response.json()
    print(json.dumps(payload, indent=2))
    return 0 if response.ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "gen-fixtures":
            return _cmd_gen_fixtures(args)
        if args.command == "query":
            return _cmd_query(args)
        config = load_config(args.config)
        apply_overrides(
            config,
            k_retrieve=args.k_retrieve,
            k_final=args.k_final,
            stub_models=args.stub_models,
        )
        if args.command == "ingest":
            return _cmd_ingest(args, config)
        if args.command == "build-index":
            return _cmd_build_index(config)
        if args.command == "serve":
            return _cmd_serve(args, config)
        if args.command == "eval":
            return _cmd_eval(args, config)
        parser.print_usage(sys.stderr)
        return 2
    except MitraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except requests.RequestException as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

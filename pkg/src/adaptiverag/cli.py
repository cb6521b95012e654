"""Operator command line: build indexes, ask one-shot queries, run full
evaluations, and render reports.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 provider
failure. Mock mode is the default; live providers are explicit opt-in
via --live plus endpoint/model settings, with credentials read from an
environment variable only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .benchmark import (
    BenchmarkConfig,
    BenchmarkLoadError,
    BenchmarkValidationError,
    load_benchmark,
    load_financebench,
    run_benchmark,
)
from .corpus import (
    Corpus,
    DocumentFormatError,
    bundled_benchmark_path,
    bundled_corpus_dir,
    load_document_file,
)
from .gateway import ChatGateway, MockChatProvider, ProviderError, RemoteChatProvider, RemoteProviderConfig
from .reports import emit_report, format_summary
from .router import HybridRouter
from .tree import TreeEngine, summarize_tree_cached
from .vector import (
    MockEmbeddingProvider,
    RemoteEmbeddingProvider,
    VectorEngine,
    VectorIndex,
    build_index,
    chunk_document,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_PROVIDER = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    corpus: str = ""
    benchmark: str = ""
    out: str = "out"
    mock: bool = True
    chat_endpoint: str = ""
    chat_model: str = ""
    embed_endpoint: str = ""
    embed_model: str = ""
    embed_dimension: int = 384
    api_key_env: str = "ADAPTIVERAG_API_KEY"
    methods: str = "vector,tree,hybrid"
    chunk_size: int = 100
    overlap: int = 20
    k: int = 5
    tree_budget: int = 32
    max_depth: int = 3
    gold_override: bool = False
    parallelism: int = 1
    seed: int = 0

    @classmethod
    def build(cls, args: argparse.Namespace) -> "RunConfig":
        """Precedence: flags over config file over environment over defaults."""
        config = cls()
        env_map = {"corpus": "ADAPTIVERAG_CORPUS", "out": "ADAPTIVERAG_OUT",
                   "benchmark": "ADAPTIVERAG_BENCHMARK"}
        for name, env in env_map.items():
            if os.environ.get(env):
                setattr(config, name, os.environ[env])
        config_path = getattr(args, "config", None)
        if config_path:
            try:
                data = json.loads(Path(config_path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise BenchmarkValidationError(f"bad config file {config_path}: {exc}")
            known = {f.name for f in fields(cls)}
            for key, value in data.items():
                if key not in known:
                    raise BenchmarkValidationError(f"unknown config key {key!r}")
                setattr(config, key, value)
        for f in fields(cls):
            value = getattr(args, f.name, None)
            if value is not None:
                setattr(config, f.name, value)
        if not config.corpus:
            config.corpus = str(bundled_corpus_dir())
        if not config.benchmark:
            config.benchmark = str(bundled_benchmark_path())
        return config


def _gateway(config: RunConfig, audit_path: Path | None = None) -> ChatGateway:
    if config.mock:
        return ChatGateway(provider=MockChatProvider(), audit_path=audit_path)
    if not config.chat_endpoint or not config.chat_model:
        raise BenchmarkValidationError(
            "live mode requires chat_endpoint and chat_model"
        )
    provider = RemoteChatProvider(
        RemoteProviderConfig(
            endpoint=config.chat_endpoint,
            model=config.chat_model,
            api_key_env=config.api_key_env,
        )
    )
    return ChatGateway(provider=provider, audit_path=audit_path)


def _embedder(config: RunConfig):
    if config.mock:
        return MockEmbeddingProvider()
    if not config.embed_endpoint or not config.embed_model:
        raise BenchmarkValidationError(
            "live mode requires embed_endpoint and embed_model"
        )
    return RemoteEmbeddingProvider(
        endpoint=config.embed_endpoint,
        model=config.embed_model,
        dimension=config.embed_dimension,
        api_key_env=config.api_key_env,
    )


def _load_corpus_reporting(config: RunConfig) -> Corpus:
    directory = Path(config.corpus)
    if not directory.is_dir():
        raise BenchmarkValidationError(f"corpus directory not found: {directory}")
    corpus = Corpus()
    failures: list[str] = []
    paths = sorted(directory.glob("*/*.md"))
    if not paths:
        raise BenchmarkValidationError(f"no corpus documents under {directory}")
    for path in paths:
        try:
            corpus.add(load_document_file(path))
        except (DocumentFormatError, ValueError) as exc:
            failures.append(f"{path}: {exc}")
    if failures:
        raise BenchmarkValidationError(
            "corpus parse failures:\n" + "\n".join(failures)
        )
    return corpus


def _index_paths(out_dir: Path) -> tuple[Path, Path]:
    return out_dir / "vector_index.json", out_dir / "summary_cache.json"


def cmd_index(config: RunConfig) -> int:
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = _gateway(config, audit_path=out_dir / "audit.log")
    embedder = _embedder(config)
    corpus = _load_corpus_reporting(config)

    index_path, cache_path = _index_paths(out_dir)
    chunks = []
    for doc_id in sorted(corpus.docs):
        chunks.extend(chunk_document(corpus.docs[doc_id], config.chunk_size, config.overlap))
    index = build_index(chunks, embedder)
    index.save(index_path)
    for doc_id in sorted(corpus.docs):
        summarize_tree_cached(corpus.docs[doc_id], gateway, cache_path)
    print(f"indexed {len(corpus.docs)} documents, {len(chunks)} chunks -> {out_dir}")
    return EXIT_OK


def cmd_query(config: RunConfig, question: str, strategy: str,
              as_json: bool = False) -> int:
    if not question.strip():
        raise UsageError("question must be non-empty")
    if strategy not in ("vector", "tree", "hybrid"):
        raise UsageError(f"unknown strategy {strategy!r}")
    out_dir = Path(config.out)
    index_path, cache_path = _index_paths(out_dir)
    if not index_path.exists():
        raise BenchmarkValidationError(
            f"no index at {index_path}; run 'adaptiverag index' first"
        )
    gateway = _gateway(config, audit_path=out_dir / "audit.log")
    embedder = _embedder(config)
    corpus = _load_corpus_reporting(config)
    index = VectorIndex.load(index_path)
    vector_engine = VectorEngine(index, embedder, gateway, k=config.k)
    summaries = {
        doc_id: summarize_tree_cached(corpus.docs[doc_id], gateway, cache_path)
        for doc_id in sorted(corpus.docs)
    }
    tree_engine = TreeEngine(dict(corpus.docs), summaries, gateway,
                             budget=config.tree_budget, max_depth=config.max_depth)
    if strategy == "vector":
        result = vector_engine.answer(question)
    elif strategy == "tree":
        result = tree_engine.answer(question)
    else:
        result = HybridRouter(vector_engine, tree_engine, gateway).answer(question)

    if as_json:
        print(json.dumps({
            "query_id": result.query_id,
            "answer": result.answer,
            "retrieved_sections": result.retrieved_sections,
            "strategy": result.strategy.value,
            "latency_seconds": result.latency_seconds,
            "trace": result.trace,
        }))
        return EXIT_OK
    print(f"strategy: {result.strategy.value}")
    routing = (result.trace or {}).get("routing")
    if routing:
        print(f"tier: {routing['tier']} ({routing['classifier_source']})")
    print(f"answer: {result.answer}")
    print(f"sections: {', '.join(result.retrieved_sections) or '(none)'}")
    print(f"latency: {result.latency_seconds:.3f}s")
    return EXIT_OK


def cmd_eval(config: RunConfig, financebench: str | None = None,
             sample_n: int = 50) -> int:
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = _gateway(config, audit_path=out_dir / "audit.log")
    embedder = _embedder(config)
    methods = tuple(m.strip() for m in config.methods.split(",") if m.strip())

    if financebench:
        queries, corpus = load_financebench(financebench, sample_n=sample_n,
                                            seed=config.seed)
    else:
        corpus = _load_corpus_reporting(config)
        queries = load_benchmark(config.benchmark, corpus=corpus)

    bench_config = BenchmarkConfig(
        k=config.k, chunk_size=config.chunk_size, overlap=config.overlap,
        tree_budget=config.tree_budget, max_depth=config.max_depth,
        gold_override=config.gold_override, parallelism=config.parallelism,
        seed=config.seed,
    )
    report = run_benchmark(corpus, queries, methods=methods, config=bench_config,
                           gateway=gateway, embedder=embedder)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=1), encoding="utf-8"
    )
    emit_report(report, out_dir)
    errors = [r for r in report.rows if r.error]
    print(format_summary(report))
    print(f"\n{len(report.rows)} rows written to {out_dir} "
          f"({len(errors)} scored zero on error)")
    return EXIT_OK


def cmd_report(report_path: str, out: str) -> int:
    from .benchmark import BenchmarkReport, ReportRow, compute_aggregates

    try:
        data = json.loads(Path(report_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BenchmarkValidationError(f"cannot read report {report_path}: {exc}")
    rows = [ReportRow(**row) for row in data["rows"]]
    report = BenchmarkReport(rows=rows, aggregates=compute_aggregates(rows),
                             metadata=data.get("metadata", {}))
    emit_report(report, out)
    print(format_summary(report))
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="adaptiverag",
                     description="Adaptive hybrid retrieval harness")
    parser.add_argument("--config", help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: _Parser) -> None:
        p.add_argument("--corpus", help="corpus directory")
        p.add_argument("--out", help="output directory")
        p.add_argument("--mock", dest="mock", action="store_const", const=True,
                       help="force mock providers (default)")
        p.add_argument("--live", dest="mock", action="store_const", const=False,
                       help="use remote providers")
        p.add_argument("--seed", type=int)
        p.add_argument("--chunk-size", dest="chunk_size", type=int)
        p.add_argument("--overlap", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--tree-budget", dest="tree_budget", type=int)

    p_index = sub.add_parser("index", help="parse corpus and build indexes")
    add_common(p_index)

    p_query = sub.add_parser("query", help="answer one question")
    add_common(p_query)
    p_query.add_argument("question")
    p_query.add_argument("--strategy", default="hybrid",
                         help="vector | tree | hybrid")
    p_query.add_argument("--json", action="store_true", dest="as_json",
                         help="machine-readable output")

    p_eval = sub.add_parser("eval", help="run the full benchmark")
    add_common(p_eval)
    p_eval.add_argument("--benchmark", help="benchmark JSONL path")
    p_eval.add_argument("--methods", help="comma-separated method subset")
    p_eval.add_argument("--gold-override", dest="gold_override",
                        action="store_const", const=True,
                        help="use benchmark tier labels instead of the classifier")
    p_eval.add_argument("--financebench", help="FinanceBench JSONL path")
    p_eval.add_argument("--sample-n", dest="sample_n", type=int, default=50)

    p_report = sub.add_parser("report", help="re-render a saved report")
    p_report.add_argument("--report", required=True, help="report.json path")
    p_report.add_argument("--out", default="out")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "report":
            return cmd_report(args.report, args.out)
        config = RunConfig.build(args)
        if args.command == "index":
            return cmd_index(config)
        if args.command == "query":
            return cmd_query(config, args.question, args.strategy,
                             as_json=args.as_json)
        if args.command == "eval":
            return cmd_eval(config, financebench=args.financebench,
                            sample_n=args.sample_n)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BenchmarkLoadError, BenchmarkValidationError, DocumentFormatError,
            FileNotFoundError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProviderError as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())

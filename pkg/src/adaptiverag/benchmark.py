"""Benchmark loading, evaluation runs across the three methods, and the
aggregate report structure.

Benchmark files are JSON Lines, one record per line with query_id,
domain, tier, question, gold_answer, gold_sections[], doc_ids[].
FinanceBench input is JSON Lines with question, answer, question type,
and evidence passages; each record's evidence set is materialized as a
single-document tree so all three engines can run over it.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .corpus import Corpus, DocumentTree, SectionNode, resolve_references
from .gateway import ChatGateway
from .judge import JudgeScore, RetrievalMetrics, judge_answer, section_metrics
from .results import Strategy
from .router import HybridRouter
from .tiers import TIERS
from .tree import TreeEngine, summarize_tree
from .vector import MockEmbeddingProvider, VectorEngine, build_index, chunk_document

REPORT_SCHEMA_VERSION = "1"
METHODS = ("vector", "tree", "hybrid")

# Default field names for FinanceBench-style records; remappable because
# upstream schema naming varies.
FINANCEBENCH_FIELD_MAP = {
    "question_id": "financebench_id",
    "question": "question",
    "answer": "answer",
    "question_type": "question_type",
    "evidence": "evidence",
    "evidence_doc": "doc_name",
    "evidence_text": "evidence_text",
}


class BenchmarkLoadError(ValueError):
    pass


class BenchmarkValidationError(ValueError):
    pass


@dataclass
class QueryRecord:
    query_id: str
    domain: str
    question: str
    gold_answer: str
    gold_sections: list[str]
    doc_ids: list[str] = field(default_factory=list)
    tier: str | None = None
    question_type: str | None = None


def load_benchmark(path: str | Path, corpus: Corpus | None = None) -> list[QueryRecord]:
    """Load and validate the tiered corpus benchmark."""
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise BenchmarkLoadError(f"empty benchmark file: {path}")
    records: list[QueryRecord] = []
    for index, line in enumerate(lines):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BenchmarkLoadError(f"record {index}: invalid JSON: {exc}") from exc
        for key in ("query_id", "domain", "tier", "question", "gold_answer",
                    "gold_sections", "doc_ids"):
            if key not in raw:
                raise BenchmarkLoadError(f"record {index}: missing field {key!r}")
        if raw["tier"] not in TIERS:
            raise BenchmarkValidationError(
                f"record {index} ({raw['query_id']}): unknown tier {raw['tier']!r}"
            )
        if not raw["gold_sections"]:
            raise BenchmarkValidationError(
                f"record {index} ({raw['query_id']}): gold_sections must be nonempty"
            )
        records.append(
            QueryRecord(
                query_id=raw["query_id"],
                domain=raw["domain"],
                tier=raw["tier"],
                question=raw["question"],
                gold_answer=raw["gold_answer"],
                gold_sections=list(raw["gold_sections"]),
                doc_ids=list(raw["doc_ids"]),
            )
        )
    tiers_present = {r.tier for r in records}
    if tiers_present != set(TIERS):
        raise BenchmarkValidationError(
            f"benchmark must cover all four tiers; found {sorted(tiers_present)}"
        )
    if corpus is not None:
        known = corpus.all_node_ids()
        for record in records:
            dangling = [s for s in record.gold_sections if s not in known]
            if dangling:
                raise BenchmarkValidationError(
                    f"{record.query_id}: gold sections not in corpus: {dangling}"
                )
            missing_docs = [d for d in record.doc_ids if d not in corpus.docs]
            if missing_docs:
                raise BenchmarkValidationError(
                    f"{record.query_id}: unknown doc_ids: {missing_docs}"
                )
    return records


def _evidence_tree(doc_id: str, passages: list[str]) -> DocumentTree:
    root = SectionNode(node_id=f"{doc_id}:root", title=doc_id, level=0)
    lookup = {root.node_id: root}
    for i, passage in enumerate(passages, start=1):
        node = SectionNode(
            node_id=f"{doc_id}:evidence-{i}",
            title=f"Evidence {i}",
            level=1,
            body=passage,
        )
        root.children.append(node)
        lookup[node.node_id] = node
    tree = DocumentTree(doc_id=doc_id, domain="external", root=root, node_lookup=lookup)
    return resolve_references(tree)


def _stratified_counts(type_counts: dict[str, int], sample_n: int) -> dict[str, int]:
    """Largest-remainder apportionment; every nonempty type gets >= 1 when
    the sample is at least as large as the number of types."""
    total = sum(type_counts.values())
    quotas = {t: sample_n * c / total for t, c in type_counts.items()}
    counts = {t: math.floor(q) for t, q in quotas.items()}
    remainder = sample_n - sum(counts.values())
    order = sorted(
        type_counts,
        key=lambda t: (-(quotas[t] - counts[t]), list(type_counts).index(t)),
    )
    for t in order[:remainder]:
        counts[t] += 1
    if sample_n >= len(type_counts):
        for t in counts:
            if counts[t] == 0:
                donor = max(counts, key=lambda d: counts[d])
                counts[donor] -= 1
                counts[t] = 1
    for t, c in counts.items():
        counts[t] = min(c, type_counts[t])
    return counts


def load_financebench(path: str | Path, sample_n: int, seed: int,
                      field_map: dict[str, str] | None = None
                      ) -> tuple[list[QueryRecord], Corpus]:
    """Load FinanceBench-style records with stratified sampling by
    question type, materializing evidence passages as mini document trees.
    """
    fields = dict(FINANCEBENCH_FIELD_MAP)
    if field_map:
        fields.update(field_map)
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise BenchmarkLoadError(f"empty FinanceBench file: {path}")
    raws: list[dict] = []
    for index, line in enumerate(lines):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BenchmarkLoadError(f"record {index}: invalid JSON: {exc}") from exc
        for logical in ("question", "answer", "question_type", "evidence"):
            if fields[logical] not in raw:
                raise BenchmarkLoadError(
                    f"record {index}: missing field {fields[logical]!r}"
                )
        raws.append(raw)
    if sample_n > len(raws):
        raise BenchmarkValidationError(
            f"sample_n {sample_n} exceeds the {len(raws)} available records"
        )

    by_type: dict[str, list[int]] = {}
    for i, raw in enumerate(raws):
        by_type.setdefault(raw[fields["question_type"]], []).append(i)
    counts = _stratified_counts({t: len(ix) for t, ix in by_type.items()}, sample_n)

    rng = random.Random(seed)
    chosen: list[int] = []
    for qtype, indices in by_type.items():
        chosen.extend(rng.sample(indices, counts[qtype]))
    chosen.sort()

    records: list[QueryRecord] = []
    corpus = Corpus()
    for i in chosen:
        raw = raws[i]
        query_id = str(raw.get(fields["question_id"], f"fb-{i:04d}"))
        doc_id = f"fb-{query_id}"
        passages = [ev[fields["evidence_text"]] for ev in raw[fields["evidence"]]]
        tree = _evidence_tree(doc_id, passages)
        corpus.add(tree)
        records.append(
            QueryRecord(
                query_id=query_id,
                domain="external",
                question=raw[fields["question"]],
                gold_answer=str(raw[fields["answer"]]),
                gold_sections=[n for n in tree.node_lookup if not n.endswith(":root")],
                doc_ids=[doc_id],
                tier=None,
                question_type=raw[fields["question_type"]],
            )
        )
    return records, corpus


@dataclass
class BenchmarkConfig:
    k: int = 5
    chunk_size: int = 100
    overlap: int = 20
    tree_budget: int = 32
    max_depth: int = 3
    gold_override: bool = False
    aggregation: str = "mean"
    parallelism: int = 1
    seed: int = 0

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        ).hexdigest()[:16]


@dataclass
class ReportRow:
    method: str
    query_id: str
    domain: str
    tier: str | None
    question_type: str | None
    strategy: str
    classifier_source: str | None
    accuracy: float
    completeness: float
    relevance: float
    quality: float
    precision: float
    recall: float
    f1: float
    latency_seconds: float
    retrieved_sections: list[str]
    error: str | None = None


@dataclass
class BenchmarkReport:
    rows: list[ReportRow]
    aggregates: dict
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "rows": [asdict(r) for r in self.rows],
            "aggregates": self.aggregates,
            "metadata": self.metadata,
        }


_AGG_FIELDS = ("quality", "accuracy", "completeness", "relevance",
               "precision", "recall", "f1", "latency_seconds")


def _group_mean(rows: list[ReportRow]) -> dict:
    out = {f: sum(getattr(r, f) for r in rows) / len(rows) for f in _AGG_FIELDS}
    out["count"] = len(rows)
    return out


def compute_aggregates(rows: list[ReportRow]) -> dict:
    def group_by(keyfn) -> dict:
        groups: dict[str, list[ReportRow]] = {}
        for row in rows:
            key = keyfn(row)
            if key is None:
                continue
            groups.setdefault(key, []).append(row)
        return {k: _group_mean(v) for k, v in sorted(groups.items())}

    return {
        "overall": group_by(lambda r: r.method),
        "by_tier": group_by(lambda r: f"{r.method}|{r.tier}" if r.tier else None),
        "by_domain": group_by(lambda r: f"{r.method}|{r.domain}"),
        "by_domain_tier": group_by(
            lambda r: f"{r.method}|{r.domain}|{r.tier}" if r.tier else None
        ),
        "by_question_type": group_by(
            lambda r: f"{r.method}|{r.question_type}" if r.question_type else None
        ),
    }


def _build_engines(corpus: Corpus, config: BenchmarkConfig, gateway: ChatGateway,
                   embedder) -> tuple[VectorEngine, TreeEngine, HybridRouter]:
    chunks = []
    for doc_id in sorted(corpus.docs):
        chunks.extend(
            chunk_document(corpus.docs[doc_id], config.chunk_size, config.overlap)
        )
    index = build_index(chunks, embedder)
    vector_engine = VectorEngine(index, embedder, gateway, k=config.k)
    summaries = {
        doc_id: summarize_tree(corpus.docs[doc_id], gateway)
        for doc_id in sorted(corpus.docs)
    }
    tree_engine = TreeEngine(
        dict(corpus.docs), summaries, gateway,
        budget=config.tree_budget, max_depth=config.max_depth,
    )
    hybrid = HybridRouter(vector_engine, tree_engine, gateway)
    return vector_engine, tree_engine, hybrid


def _zero_row(method: str, record: QueryRecord, latency: float, error: str) -> ReportRow:
    return ReportRow(
        method=method,
        query_id=record.query_id,
        domain=record.domain,
        tier=record.tier,
        question_type=record.question_type,
        strategy="error",
        classifier_source=None,
        accuracy=0.0, completeness=0.0, relevance=0.0, quality=0.0,
        precision=0.0, recall=0.0, f1=0.0,
        latency_seconds=latency,
        retrieved_sections=[],
        error=error,
    )


def run_benchmark(corpus: Corpus, queries: list[QueryRecord],
                  methods: tuple[str, ...] = METHODS,
                  config: BenchmarkConfig | None = None,
                  gateway: ChatGateway | None = None,
                  embedder=None) -> BenchmarkReport:
    """Execute every (method, query) pair, judge, and aggregate.

    Per-query failures become zero-score rows with an error annotation
    rather than aborting the run.
    """
    config = config or BenchmarkConfig()
    gateway = gateway or ChatGateway()
    embedder = embedder or MockEmbeddingProvider()
    for method in methods:
        if method not in METHODS:
            raise BenchmarkValidationError(f"unknown method {method!r}")

    known = corpus.all_node_ids()
    for record in queries:
        dangling = [s for s in record.gold_sections if s not in known]
        if dangling:
            raise BenchmarkValidationError(
                f"{record.query_id}: gold sections missing from corpus: {dangling}"
            )

    vector_engine, tree_engine, hybrid = _build_engines(corpus, config, gateway, embedder)
    runners = {"vector": vector_engine.answer, "tree": tree_engine.answer,
               "hybrid": hybrid.answer}

    def execute(method: str, record: QueryRecord) -> ReportRow:
        start = time.perf_counter()
        try:
            kwargs = {"query_id": record.query_id, "doc_ids": record.doc_ids or None}
            if method == "hybrid" and config.gold_override and record.tier:
                kwargs["gold_override"] = record.tier
            result = runners[method](record.question, **kwargs)
        except Exception as exc:
            return _zero_row(method, record, time.perf_counter() - start, str(exc))
        try:
            score = judge_answer(
                record.question, record.gold_answer, result.answer, gateway,
                aggregation=config.aggregation,
            )
        except Exception as exc:
            return _zero_row(
                method, record, time.perf_counter() - start, f"judge failure: {exc}"
            )
        metrics = section_metrics(result.retrieved_sections, record.gold_sections)
        routing = (result.trace or {}).get("routing", {})
        return ReportRow(
            method=method,
            query_id=record.query_id,
            domain=record.domain,
            tier=record.tier,
            question_type=record.question_type,
            strategy=result.strategy.value,
            classifier_source=routing.get("classifier_source"),
            accuracy=score.accuracy,
            completeness=score.completeness,
            relevance=score.relevance,
            quality=score.overall,
            precision=metrics.precision,
            recall=metrics.recall,
            f1=metrics.f1,
            latency_seconds=result.latency_seconds,
            retrieved_sections=list(result.retrieved_sections),
        )

    pairs = [(method, record) for method in methods for record in queries]
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            rows = list(pool.map(lambda p: execute(*p), pairs))
    else:
        rows = [execute(method, record) for method, record in pairs]

    metadata = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "chat_provider": getattr(gateway.provider, "provider_id", "unknown"),
        "embedding_provider": getattr(embedder, "provider_id", "unknown"),
        "config_digest": config.digest(),
        "config": asdict(config),
        "methods": list(methods),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return BenchmarkReport(rows=rows, aggregates=compute_aggregates(rows), metadata=metadata)


def normalized_report_dict(report: BenchmarkReport) -> dict:
    """Report dict with timing and timestamp fields zeroed, for
    determinism comparisons."""
    data = report.to_dict()
    data["metadata"] = dict(data["metadata"])
    data["metadata"]["timestamp"] = ""
    for row in data["rows"]:
        row["latency_seconds"] = 0.0
    for table in data["aggregates"].values():
        for group in table.values():
            group["latency_seconds"] = 0.0
    return data

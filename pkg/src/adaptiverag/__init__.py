"""Adaptive hybrid retrieval: vector RAG, tree-reasoning RAG, and a
query-complexity router, with a tiered benchmark and judging harness."""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    DocumentTree,
    SectionNode,
    detect_cross_references,
    flatten_sections,
    load_corpus,
    parse_document,
    resolve_references,
)
from .gateway import ChatGateway, ChatRequest, MockChatProvider
from .judge import JudgeScore, RetrievalMetrics, judge_answer, section_metrics, timed
from .results import RetrievalResult, Strategy
from .router import HybridRouter, classify_tier, fuse, route
from .tree import TreeEngine, follow_cross_references, summarize_tree, tree_search
from .vector import MockEmbeddingProvider, VectorEngine, build_index, chunk_document, search

__all__ = [
    "Corpus",
    "DocumentTree",
    "SectionNode",
    "detect_cross_references",
    "flatten_sections",
    "load_corpus",
    "parse_document",
    "resolve_references",
    "ChatGateway",
    "ChatRequest",
    "MockChatProvider",
    "JudgeScore",
    "RetrievalMetrics",
    "judge_answer",
    "section_metrics",
    "timed",
    "RetrievalResult",
    "Strategy",
    "HybridRouter",
    "classify_tier",
    "fuse",
    "route",
    "TreeEngine",
    "follow_cross_references",
    "summarize_tree",
    "tree_search",
    "MockEmbeddingProvider",
    "VectorEngine",
    "build_index",
    "chunk_document",
    "search",
]

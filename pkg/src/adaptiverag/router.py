"""Adaptive hybrid retrieval: tier classification, strategy routing, and
dual-result fusion.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .gateway import ChatGateway, ChatRequest
from .prompts import CLASSIFY_SYSTEM, FUSE_SYSTEM, classify_user, fuse_user
from .results import RetrievalResult, Strategy
from .tiers import TIERS, heuristic_tier

ROUTING_MAP = {
    "T1": Strategy.VECTOR,
    "T2": Strategy.TREE,
    "T3": Strategy.TREE,
    "T4": Strategy.FUSION,
}


@dataclass
class RoutingDecision:
    tier: str
    strategy: Strategy
    classifier_source: str  # "llm" | "heuristic" | "gold-override"


def route(tier: str) -> Strategy:
    """Total pure map from tier to execution strategy."""
    try:
        return ROUTING_MAP[tier]
    except KeyError:
        raise ValueError(f"unknown tier {tier!r}") from None


def _parse_tier(reply: str) -> str | None:
    for token in reply.replace(",", " ").split():
        cleaned = token.strip().upper().rstrip(".:")
        if cleaned in TIERS:
            return cleaned
    return None


def classify_tier(query: str, gateway: ChatGateway,
                  gold_override: str | None = None) -> tuple[str, str]:
    """Classify a query into T1-T4.

    A gold override wins outright; otherwise the model is prompted with
    the tier rubric, with one re-prompt and then a total keyword fallback.
    """
    if gold_override is not None:
        if gold_override not in TIERS:
            raise ValueError(f"invalid gold tier {gold_override!r}")
        return gold_override, "gold-override"
    request = ChatRequest(
        system_prompt=CLASSIFY_SYSTEM,
        user_prompt=classify_user(query),
        max_output_tokens=8,
        tag="classify",
    )
    for _ in range(2):
        try:
            tier = _parse_tier(gateway.complete(request))
        except Exception:
            tier = None
        if tier is not None:
            return tier, "llm"
    return heuristic_tier(query), "heuristic"


def fuse(vector_result: RetrievalResult | None, tree_result: RetrievalResult | None,
         query: str, gateway: ChatGateway) -> RetrievalResult:
    """Merge both engines' outputs: tree sections first, then vector-only
    sections, with a synthesis pass over both answers. A single failed
    input degrades to the surviving result."""
    start = time.perf_counter()
    alive = [r for r in (vector_result, tree_result) if r is not None and r.error is None]
    if not alive:
        raise ValueError("fuse requires at least one successful input")
    if len(alive) == 2 and vector_result.query_id != tree_result.query_id:
        raise ValueError(
            f"query_id mismatch: {vector_result.query_id!r} != {tree_result.query_id!r}"
        )

    if len(alive) == 1:
        survivor = alive[0]
        return RetrievalResult(
            query_id=survivor.query_id,
            answer=survivor.answer,
            retrieved_sections=list(survivor.retrieved_sections),
            strategy=Strategy.FUSION,
            latency_seconds=survivor.latency_seconds + (time.perf_counter() - start),
            contributing_strategies=frozenset({survivor.strategy}),
            trace={"degraded": True, "survivor": survivor.strategy.value},
        )

    sections = list(tree_result.retrieved_sections)
    sections.extend(
        sid for sid in vector_result.retrieved_sections if sid not in sections
    )
    answer = gateway.complete(
        ChatRequest(
            system_prompt=FUSE_SYSTEM,
            user_prompt=fuse_user(query, vector_result.answer, tree_result.answer),
            tag="fuse",
        )
    )
    fusion_overhead = time.perf_counter() - start
    return RetrievalResult(
        query_id=vector_result.query_id,
        answer=answer,
        retrieved_sections=sections,
        strategy=Strategy.FUSION,
        latency_seconds=vector_result.latency_seconds
        + tree_result.latency_seconds
        + fusion_overhead,
        contributing_strategies=frozenset({Strategy.VECTOR, Strategy.TREE}),
        trace={"accounting": "sequential"},
    )


class HybridRouter:
    """Classify, route, execute, and (for T4) fuse."""

    def __init__(self, vector_engine, tree_engine, gateway: ChatGateway):
        self.vector_engine = vector_engine
        self.tree_engine = tree_engine
        self.gateway = gateway

    def answer(self, query: str, query_id: str = "adhoc",
               gold_override: str | None = None,
               doc_ids: list[str] | None = None) -> RetrievalResult:
        tier, source = classify_tier(query, self.gateway, gold_override=gold_override)
        strategy = route(tier)
        decision = RoutingDecision(tier=tier, strategy=strategy, classifier_source=source)

        if strategy is Strategy.VECTOR:
            result = self.vector_engine.answer(query, query_id=query_id, doc_ids=doc_ids)
        elif strategy is Strategy.TREE:
            result = self.tree_engine.answer(query, query_id=query_id, doc_ids=doc_ids)
        else:
            vector_result = self._run_safely(self.vector_engine, query, query_id, doc_ids)
            tree_result = self._run_safely(self.tree_engine, query, query_id, doc_ids)
            result = fuse(vector_result, tree_result, query, self.gateway)

        result.trace = dict(result.trace or {})
        result.trace["routing"] = {
            "tier": decision.tier,
            "strategy": decision.strategy.value,
            "classifier_source": decision.classifier_source,
        }
        return result

    @staticmethod
    def _run_safely(engine, query: str, query_id: str,
                    doc_ids: list[str] | None) -> RetrievalResult | None:
        try:
            return engine.answer(query, query_id=query_id, doc_ids=doc_ids)
        except Exception:
            return None

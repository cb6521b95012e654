"""Tree-reasoning retrieval: node summaries, model-guided descent through
the section hierarchy, and recursive cross-reference following.
"""

from __future__ import annotations

import hashlib
import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DocumentTree, SectionNode, serialize_document
from .gateway import ChatGateway, ChatRequest
from .prompts import (
    GENERATE_SYSTEM,
    SUMMARIZE_SYSTEM,
    TREE_SELECT_SYSTEM,
    generate_user,
    summarize_user,
    tree_select_user,
)
from .results import RetrievalResult, Strategy


class SummarizationError(RuntimeError):
    """Summarization failed for a specific node; no partial map is returned."""


class TreeSelectionError(RuntimeError):
    """The selection reply stayed unparseable after one re-prompt."""


@dataclass
class NodeSummary:
    node_id: str
    summary: str


@dataclass
class TreeSearchTrace:
    visited: list[str] = field(default_factory=list)
    selected: list[str] = field(default_factory=list)
    followed_refs: list[tuple[str, str]] = field(default_factory=list)
    budget_used: int = 0


def summarize_tree(tree: DocumentTree, gateway: ChatGateway,
                   max_summary_tokens: int = 64) -> dict[str, NodeSummary]:
    """Bottom-up summaries: leaves from their body, internal nodes from
    title plus child summaries. Empty-body leaves fall back to the title.
    """
    summaries: dict[str, NodeSummary] = {}

    def summarize(node: SectionNode) -> None:
        for child in node.children:
            summarize(child)
        if node.children:
            content = node.title + "\n" + "\n".join(
                summaries[c.node_id].summary for c in node.children
            )
        else:
            content = node.body
        text = ""
        if content.strip():
            try:
                text = gateway.complete(
                    ChatRequest(
                        system_prompt=SUMMARIZE_SYSTEM,
                        user_prompt=summarize_user(content),
                        max_output_tokens=max_summary_tokens,
                        tag="summarize",
                    )
                )
            except Exception as exc:
                raise SummarizationError(
                    f"summarization failed for node {node.node_id}: {exc}"
                ) from exc
        if not text.strip():
            text = node.title or node.node_id
        summaries[node.node_id] = NodeSummary(node_id=node.node_id, summary=text)

    summarize(tree.root)
    return summaries


def _parse_selection(reply: str) -> tuple[bool, list[str]]:
    relevant = None
    expand: list[str] | None = None
    for line in reply.splitlines():
        stripped = line.strip()
        low = stripped.lower()
        if low.startswith("relevant:"):
            value = low[len("relevant:"):].strip()
            if value in ("yes", "no"):
                relevant = value == "yes"
        elif low.startswith("expand:"):
            value = stripped[len("EXPAND:"):].strip()
            if value.lower() in ("none", ""):
                expand = []
            else:
                expand = [part.strip() for part in value.split(",") if part.strip()]
    if relevant is None or expand is None:
        raise ValueError(f"unparseable selection reply: {reply!r}")
    return relevant, expand


def tree_search(tree: DocumentTree, summaries: dict[str, NodeSummary], query: str,
                gateway: ChatGateway, budget: int = 32) -> TreeSearchTrace:
    """Iterative descent: at each visited node the model picks children to
    expand and flags relevance. Stops when the frontier empties or the
    visit budget runs out. The document root is never selected.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    missing = [nid for nid in tree.node_lookup if nid not in summaries]
    if missing:
        raise ValueError(f"summaries missing for nodes: {missing[:5]}")

    trace = TreeSearchTrace()
    frontier: deque[SectionNode] = deque([tree.root])
    seen: set[str] = set()

    while frontier and len(trace.visited) < budget:
        node = frontier.popleft()
        if node.node_id in seen:
            continue
        seen.add(node.node_id)
        trace.visited.append(node.node_id)

        prompt = tree_select_user(
            query,
            node.node_id,
            summaries[node.node_id].summary,
            [(c.node_id, summaries[c.node_id].summary) for c in node.children],
        )
        request = ChatRequest(
            system_prompt=TREE_SELECT_SYSTEM, user_prompt=prompt, tag="tree-select"
        )
        reply = gateway.complete(request)
        try:
            relevant, expand_ids = _parse_selection(reply)
        except ValueError:
            reply = gateway.complete(request)
            try:
                relevant, expand_ids = _parse_selection(reply)
            except ValueError as exc:
                raise TreeSelectionError(str(exc)) from exc

        if relevant and node is not tree.root:
            trace.selected.append(node.node_id)
        child_ids = {c.node_id: c for c in node.children}
        for child_id in expand_ids:
            child = child_ids.get(child_id)
            if child is not None and child.node_id not in seen:
                frontier.append(child)

    trace.budget_used = len(trace.visited)
    return trace


def follow_cross_references(tree: DocumentTree, selected: set[str],
                            max_depth: int = 3) -> set[str]:
    """Transitive closure of resolved cross-references within max_depth
    hops of the selected nodes. A visited set guarantees termination on
    reference cycles; the input nodes are always included.
    """
    for node_id in selected:
        if node_id not in tree.node_lookup:
            raise KeyError(f"unknown node {node_id!r}")
    expanded = set(selected)
    frontier = set(selected)
    for _ in range(max_depth):
        next_frontier: set[str] = set()
        for node_id in frontier:
            for ref in tree.node_lookup[node_id].cross_refs:
                target = ref.resolved_target_id
                if target is not None and target not in expanded:
                    expanded.add(target)
                    next_frontier.add(target)
        if not next_frontier:
            break
        frontier = next_frontier
    return expanded


def _document_order_ids(tree: DocumentTree, ids: set[str]) -> list[str]:
    return [
        node.node_id
        for node in tree.document_order()
        if node.node_id in ids and node is not tree.root
    ]


def tree_answer(query: str, tree: DocumentTree, summaries: dict[str, NodeSummary],
                gateway: ChatGateway, budget: int = 32, max_depth: int = 3,
                query_id: str = "adhoc") -> RetrievalResult:
    """Search the tree, follow references from the selection, and generate
    over the expanded node bodies in document order."""
    start = time.perf_counter()
    trace = tree_search(tree, summaries, query, gateway, budget=budget)
    expanded = follow_cross_references(tree, set(trace.selected), max_depth=max_depth)
    ordered = _document_order_ids(tree, expanded)
    context = "\n".join(
        tree.node_lookup[nid].body for nid in ordered if tree.node_lookup[nid].body
    )
    answer = gateway.complete(
        ChatRequest(
            system_prompt=GENERATE_SYSTEM,
            user_prompt=generate_user(query, context),
            tag="generate",
        )
    )
    followed = sorted(expanded - set(trace.selected))
    trace.followed_refs = [("selection", nid) for nid in followed]
    latency = time.perf_counter() - start
    return RetrievalResult(
        query_id=query_id,
        answer=answer,
        retrieved_sections=ordered,
        strategy=Strategy.TREE,
        latency_seconds=latency,
        trace={
            "visited": trace.visited,
            "selected": trace.selected,
            "followed": followed,
            "budget_used": trace.budget_used,
        },
    )


def summary_cache_key(tree: DocumentTree, model_id: str) -> str:
    content_hash = hashlib.sha256(
        serialize_document(tree).encode("utf-8")
    ).hexdigest()[:16]
    return f"{tree.doc_id}:{content_hash}:{model_id}"


def load_summary_cache(path: str | Path) -> dict[str, dict[str, str]]:
    path = Path(path)
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def save_summary_cache(path: str | Path, cache: dict[str, dict[str, str]]) -> None:
    Path(path).write_text(json.dumps(cache, indent=1), encoding="utf-8")


def summarize_tree_cached(tree: DocumentTree, gateway: ChatGateway,
                          cache_path: str | Path | None,
                          max_summary_tokens: int = 64) -> dict[str, NodeSummary]:
    """Summaries keyed by (doc, content hash, model); re-runs skip the model."""
    model_id = getattr(gateway.provider, "provider_id", "unknown")
    if cache_path is None:
        return summarize_tree(tree, gateway, max_summary_tokens=max_summary_tokens)
    cache = load_summary_cache(cache_path)
    key = summary_cache_key(tree, model_id)
    if key in cache:
        return {nid: NodeSummary(nid, text) for nid, text in cache[key].items()}
    summaries = summarize_tree(tree, gateway, max_summary_tokens=max_summary_tokens)
    cache[key] = {nid: s.summary for nid, s in summaries.items()}
    save_summary_cache(cache_path, cache)
    return summaries


class TreeEngine:
    """Per-document trees and summaries behind one answer entry point.

    Multi-document queries search each target tree independently and
    generate once over the combined context.
    """

    def __init__(self, trees: dict[str, DocumentTree],
                 summaries: dict[str, dict[str, NodeSummary]],
                 gateway: ChatGateway, budget: int = 32, max_depth: int = 3):
        self.trees = trees
        self.summaries = summaries
        self.gateway = gateway
        self.budget = budget
        self.max_depth = max_depth

    def answer(self, query: str, query_id: str = "adhoc",
               doc_ids: list[str] | None = None) -> RetrievalResult:
        start = time.perf_counter()
        targets = doc_ids if doc_ids else sorted(self.trees)
        sections: list[str] = []
        context_parts: list[str] = []
        trace: dict = {"per_doc": {}}
        for doc_id in targets:
            tree = self.trees.get(doc_id)
            if tree is None:
                raise KeyError(f"unknown document {doc_id!r}")
            search_trace = tree_search(
                tree, self.summaries[doc_id], query, self.gateway, budget=self.budget
            )
            expanded = follow_cross_references(
                tree, set(search_trace.selected), max_depth=self.max_depth
            )
            ordered = _document_order_ids(tree, expanded)
            sections.extend(nid for nid in ordered if nid not in sections)
            context_parts.extend(
                tree.node_lookup[nid].body for nid in ordered if tree.node_lookup[nid].body
            )
            trace["per_doc"][doc_id] = {
                "visited": search_trace.visited,
                "selected": search_trace.selected,
                "expanded": ordered,
            }
        answer = self.gateway.complete(
            ChatRequest(
                system_prompt=GENERATE_SYSTEM,
                user_prompt=generate_user(query, "\n".join(context_parts)),
                tag="generate",
            )
        )
        latency = time.perf_counter() - start
        return RetrievalResult(
            query_id=query_id,
            answer=answer,
            retrieved_sections=sections,
            strategy=Strategy.TREE,
            latency_seconds=latency,
            trace=trace,
        )

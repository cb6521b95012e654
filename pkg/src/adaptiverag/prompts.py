"""Versioned prompt templates shared by all chat-consuming modules.

Every template uses rigid, line-oriented field markers so replies from
the deterministic offline provider and from live models parse the same
way.
"""

from __future__ import annotations

from .tiers import TIER_DESCRIPTIONS

PROMPT_VERSION = "1"


def oneline(text: str) -> str:
    return " ".join(text.split())


CLASSIFY_SYSTEM = (
    "You classify document questions by complexity. The tiers are:\n"
    + "\n".join(f"{tier}: {desc}" for tier, desc in TIER_DESCRIPTIONS.items())
    + "\nReply with exactly one token: T1, T2, T3, or T4."
)


def classify_user(query: str) -> str:
    return f"QUERY: {oneline(query)}"


TREE_SELECT_SYSTEM = (
    "You navigate a document section tree. Given a query, the current node"
    " summary, and child summaries, reply with exactly two lines:\n"
    "RELEVANT: yes|no\n"
    "EXPAND: <comma-separated child ids, or none>"
)


def tree_select_user(query: str, node_id: str, node_summary: str,
                     children: list[tuple[str, str]]) -> str:
    lines = [f"QUERY: {oneline(query)}", f"NODE: {node_id} | {oneline(node_summary)}"]
    for child_id, summary in children:
        lines.append(f"CHILD: {child_id} | {oneline(summary)}")
    return "\n".join(lines)


SUMMARIZE_SYSTEM = (
    "Summarize the following section content in a short phrase of its most"
    " informative terms."
)


def summarize_user(content: str) -> str:
    return f"BODY:\n{content}"


GENERATE_SYSTEM = (
    "Answer the query using only the provided context. Be concise and"
    " grounded in the context text."
)


def generate_user(query: str, context: str) -> str:
    return f"QUERY: {oneline(query)}\nCONTEXT:\n{context}"


JUDGE_SYSTEM = (
    "You are a strict evaluator. Score the candidate answer against the"
    " gold answer on accuracy, completeness, and relevance, each in [0, 1]."
    " Reply with exactly four lines:\n"
    "ACCURACY: <decimal>\nCOMPLETENESS: <decimal>\nRELEVANCE: <decimal>\n"
    "RATIONALE: <one sentence>"
)


def judge_user(question: str, gold_answer: str, candidate: str) -> str:
    return (
        f"QUESTION: {oneline(question)}\n"
        f"GOLD: {oneline(gold_answer)}\n"
        f"CANDIDATE: {oneline(candidate)}"
    )


FUSE_SYSTEM = (
    "Synthesize one final answer from two candidate answers produced by"
    " different retrieval systems. Keep every distinct fact."
)


def fuse_user(query: str, vector_answer: str, tree_answer: str) -> str:
    return (
        f"QUERY: {oneline(query)}\n"
        f"ANSWER 1: {oneline(vector_answer)}\n"
        f"ANSWER 2: {oneline(tree_answer)}"
    )

"""Shared tokenization and sentence-splitting helpers.

The token rule is deliberately simple: split on whitespace, then detach
leading/trailing punctuation as separate tokens while keeping interior
punctuation attached (so "$4.2M." yields ["$4.2M", "."]).
"""

from __future__ import annotations

import re

_LEADING_PUNCT = "([{\"'“‘"
_TRAILING_PUNCT = ".,;:!?)]}\"'”’"

STOPWORDS = frozenset(
    """
    a an the and or but of in on for to was is are were be been being with
    by at as from that this these those it its has have had do does did
    what which who whom when where how why will would can could may might
    shall should must not no than then there their they them we our us you
    your i me my if so such about into over under between
    """.split()
)


def tokenize(text: str) -> list[str]:
    """Split text into word and punctuation tokens."""
    tokens: list[str] = []
    for raw in text.split():
        lead: list[str] = []
        while raw and raw[0] in _LEADING_PUNCT:
            lead.append(raw[0])
            raw = raw[1:]
        tail: list[str] = []
        while raw and raw[-1] in _TRAILING_PUNCT:
            tail.append(raw[-1])
            raw = raw[:-1]
        tokens.extend(lead)
        if raw:
            tokens.append(raw)
        tokens.extend(reversed(tail))
    return tokens


def content_tokens(text: str) -> list[str]:
    """Lowercased tokens with stopwords and bare punctuation removed."""
    out = []
    for tok in tokenize(text):
        low = tok.lower()
        if low in STOPWORDS:
            continue
        if not any(ch.isalnum() for ch in low):
            continue
        out.append(low)
    return out


def content_token_set(text: str) -> set[str]:
    return set(content_tokens(text))


_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Split on sentence-ending punctuation and newlines."""
    pieces: list[str] = []
    for line in text.splitlines():
        pieces.extend(_SENTENCE_BREAK.split(line))
    return [p.strip() for p in pieces if p.strip()]

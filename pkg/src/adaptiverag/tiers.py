"""Query complexity tiers and the keyword fallback classifier.

Tiers: T1 single-fact lookup, T2 multi-section reasoning, T3
cross-reference following, T4 multi-document synthesis.
"""

from __future__ import annotations

import re

TIERS = ("T1", "T2", "T3", "T4")

TIER_DESCRIPTIONS = {
    "T1": "single-fact lookup (e.g. What was Q3 revenue?)",
    "T2": "multi-section reasoning (e.g. Revenue vs. guidance?)",
    "T3": "cross-reference following (e.g. Appendix details?)",
    "T4": "multi-document synthesis (e.g. Compare across filings)",
}

# Checked in order; first tier with a matching cue wins.
T4_CUES = ("compare", "across", "both filings")
T3_CUES = ("appendix", "exhibit", "see", "note")
T2_CUES = ("and", "versus", "relative to guidance")


def _has_cue(query_lower: str, cues: tuple[str, ...]) -> bool:
    for cue in cues:
        if re.search(r"\b" + re.escape(cue) + r"\b", query_lower):
            return True
    return False


def heuristic_tier(query: str) -> str:
    """Total keyword classifier; every string maps to exactly one tier."""
    low = query.lower()
    if _has_cue(low, T4_CUES):
        return "T4"
    if _has_cue(low, T3_CUES):
        return "T3"
    if _has_cue(low, T2_CUES):
        return "T2"
    return "T1"

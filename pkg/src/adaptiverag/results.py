"""Shared result types returned by every retrieval engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Strategy(str, Enum):
    VECTOR = "vector"
    TREE = "tree"
    FUSION = "fusion"


@dataclass
class RetrievalResult:
    query_id: str
    answer: str
    retrieved_sections: list[str]
    strategy: Strategy
    latency_seconds: float
    contributing_strategies: frozenset[Strategy] = frozenset()
    trace: dict | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        if self.latency_seconds < 0:
            raise ValueError("latency_seconds must be >= 0")
        if len(set(self.retrieved_sections)) != len(self.retrieved_sections):
            raise ValueError("retrieved_sections must be duplicate-free")
        if (self.strategy is Strategy.FUSION) != bool(self.contributing_strategies):
            raise ValueError(
                "contributing_strategies must be non-empty exactly for fusion results"
            )

"""Answer judging, section-level retrieval metrics, and wall-clock timing."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import Callable, Iterable

from .gateway import ChatGateway, ChatRequest
from .prompts import JUDGE_SYSTEM, judge_user


class JudgeParseError(RuntimeError):
    """The judge reply stayed unparseable after one re-prompt."""


class TimedFailure(RuntimeError):
    """Wraps an operation failure while preserving the elapsed time."""

    def __init__(self, cause: BaseException, elapsed_seconds: float):
        super().__init__(f"operation failed after {elapsed_seconds:.3f}s: {cause}")
        self.cause = cause
        self.elapsed_seconds = elapsed_seconds


@dataclass
class JudgeScore:
    accuracy: float
    completeness: float
    relevance: float
    overall: float
    rationale: str = ""


@dataclass
class RetrievalMetrics:
    precision: float
    recall: float
    f1: float


AGGREGATIONS: dict[str, Callable[[float, float, float], float]] = {
    "mean": lambda a, c, r: (a + c + r) / 3.0,
    "min": lambda a, c, r: min(a, c, r),
}


def make_weighted_aggregation(wa: float, wc: float, wr: float):
    total = wa + wc + wr
    return lambda a, c, r: (wa * a + wc * c + wr * r) / total


_SCORE_LINE = re.compile(
    r"^(ACCURACY|COMPLETENESS|RELEVANCE):\s*([0-9]*\.?[0-9]+)\s*$", re.IGNORECASE
)
_RATIONALE_LINE = re.compile(r"^RATIONALE:\s*(.*)$", re.IGNORECASE)


def parse_judge_reply(reply: str) -> tuple[float, float, float, str]:
    scores: dict[str, float] = {}
    rationale = ""
    for line in reply.splitlines():
        match = _SCORE_LINE.match(line.strip())
        if match:
            value = float(match.group(2))
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"score out of range: {line!r}")
            scores[match.group(1).lower()] = value
            continue
        match = _RATIONALE_LINE.match(line.strip())
        if match:
            rationale = match.group(1)
    if set(scores) != {"accuracy", "completeness", "relevance"}:
        raise ValueError(f"missing score lines in judge reply: {reply!r}")
    return scores["accuracy"], scores["completeness"], scores["relevance"], rationale


def judge_answer(question: str, gold_answer: str, candidate: str,
                 gateway: ChatGateway, aggregation: str | Callable = "mean") -> JudgeScore:
    """Score a candidate against the gold answer with the rubric prompt."""
    aggregate = AGGREGATIONS[aggregation] if isinstance(aggregation, str) else aggregation
    request = ChatRequest(
        system_prompt=JUDGE_SYSTEM,
        user_prompt=judge_user(question, gold_answer, candidate),
        tag="judge",
    )
    last_error: Exception | None = None
    for _ in range(2):
        reply = gateway.complete(request)
        try:
            accuracy, completeness, relevance, rationale = parse_judge_reply(reply)
        except ValueError as exc:
            last_error = exc
            continue
        return JudgeScore(
            accuracy=accuracy,
            completeness=completeness,
            relevance=relevance,
            overall=aggregate(accuracy, completeness, relevance),
            rationale=rationale,
        )
    raise JudgeParseError(str(last_error))


def section_metrics(retrieved: Iterable[str], gold: Iterable[str]) -> RetrievalMetrics:
    """Set-overlap precision/recall/F1 over section ids.

    Degenerate conventions: both empty -> all 1; empty retrieved with
    nonempty gold -> all 0; empty gold with nonempty retrieved -> R=1, P=0.
    """
    retrieved_set = set(retrieved)
    gold_set = set(gold)
    if not retrieved_set and not gold_set:
        return RetrievalMetrics(1.0, 1.0, 1.0)
    if not retrieved_set:
        return RetrievalMetrics(0.0, 0.0, 0.0)
    if not gold_set:
        return RetrievalMetrics(0.0, 1.0, 0.0)
    hit = len(retrieved_set & gold_set)
    precision = hit / len(retrieved_set)
    recall = hit / len(gold_set)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RetrievalMetrics(precision, recall, f1)


def timed(operation: Callable, *args, **kwargs):
    """Run an operation and return (result, latency_seconds).

    Failures raise TimedFailure so callers still see the elapsed time.
    Uses a monotonic clock.
    """
    start = time.perf_counter()
    try:
        result = operation(*args, **kwargs)
    except BaseException as exc:
        raise TimedFailure(exc, time.perf_counter() - start) from exc
    return result, time.perf_counter() - start

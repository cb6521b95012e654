"""Shared fixtures: the bundled corpus, mock providers, and a synthetic
FinanceBench-style file for loader tests."""

from __future__ import annotations

import json
import random

import pytest

from adaptiverag.benchmark import load_benchmark
from adaptiverag.corpus import bundled_benchmark_path, bundled_corpus_dir, load_corpus
from adaptiverag.gateway import ChatGateway, MockChatProvider
from adaptiverag.vector import MockEmbeddingProvider


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(bundled_corpus_dir())


@pytest.fixture(scope="session")
def queries(corpus):
    return load_benchmark(bundled_benchmark_path(), corpus=corpus)


@pytest.fixture
def gateway():
    return ChatGateway(provider=MockChatProvider())


@pytest.fixture
def embedder():
    return MockEmbeddingProvider()


# Question-type mix for the synthetic FinanceBench file: 70/50/30.
FB_TYPES = (
    ("information extraction", 70),
    ("numerical reasoning", 50),
    ("logical reasoning", 30),
)


@pytest.fixture(scope="session")
def financebench_file(tmp_path_factory):
    rng = random.Random(7)
    path = tmp_path_factory.mktemp("fb") / "financebench.jsonl"
    vocabulary = ["revenue", "margin", "debt", "cash", "segment", "guidance",
                  "capex", "dividend", "inventory", "lease"]
    records = []
    counter = 0
    for qtype, count in FB_TYPES:
        for _ in range(count):
            counter += 1
            words = rng.sample(vocabulary, 3)
            records.append({
                "financebench_id": f"fb{counter:04d}",
                "question": f"What does the filing report about {words[0]}?",
                "answer": f"The filing reports {words[0]} of ${counter}M.",
                "question_type": qtype,
                "doc_name": f"DOC_{counter % 9}",
                "evidence": [
                    {"doc_name": f"DOC_{counter % 9}",
                     "evidence_text": f"The {w} figure was ${counter}M for the period."}
                    for w in words[:rng.randint(1, 3)]
                ],
            })
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


# Acceptance-criterion verdict lines collected by tests/test_acceptance.py
# and printed after capture ends, so they always reach the terminal.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_VERDICTS,
                       key=lambda s: int(s.split("]")[0].lstrip("[C"))):
        terminalreporter.write_line(line)

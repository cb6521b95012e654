"""Chat-completion gateway: one entry point for every model call.

Two providers ship with the package: a deterministic offline mock whose
behavior is keyed by the request tag, and a remote OpenAI-style HTTP
provider for live runs. The gateway adds retry-with-backoff, call records,
and an optional newline-delimited audit log.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .text import content_token_set, content_tokens, split_sentences, tokenize
from .tiers import heuristic_tier

TAGS = ("summarize", "tree-select", "generate", "classify", "judge", "fuse")


class ProviderError(RuntimeError):
    """Provider failure; retryable means a transient transport problem."""

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    max_output_tokens: int = 256
    temperature: float = 0.0
    tag: str = "generate"

    def __post_init__(self) -> None:
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")

    def digest(self) -> str:
        payload = json.dumps(
            [self.system_prompt, self.user_prompt, self.max_output_tokens,
             self.temperature, self.tag],
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class CallRecord:
    request_digest: str
    response_digest: str
    duration_seconds: float
    provider_id: str
    retry_count: int
    tag: str


def _field(prompt: str, marker: str) -> str:
    for line in prompt.splitlines():
        if line.startswith(marker):
            return line[len(marker):].strip()
    return ""


def _block_after(prompt: str, marker: str) -> str:
    lines = prompt.splitlines()
    for i, line in enumerate(lines):
        if line.startswith(marker):
            remainder = line[len(marker):].strip()
            block = "\n".join(lines[i + 1:])
            return (remainder + "\n" + block).strip() if remainder else block.strip()
    return ""


class MockChatProvider:
    """Pure-function provider: identical requests give identical replies."""

    provider_id = "mock"

    def complete(self, request: ChatRequest) -> str:
        handler = {
            "classify": self._classify,
            "tree-select": self._tree_select,
            "summarize": lambda prompt: self._summarize(prompt, request.max_output_tokens),
            "generate": self._generate,
            "judge": self._judge,
            "fuse": self._fuse,
        }[request.tag]
        reply = handler(request.user_prompt)
        words = reply.split()
        if len(words) > request.max_output_tokens:
            reply = " ".join(words[: request.max_output_tokens])
        return reply

    def _classify(self, prompt: str) -> str:
        return heuristic_tier(_field(prompt, "QUERY:"))

    def _tree_select(self, prompt: str) -> str:
        query_tokens = content_token_set(_field(prompt, "QUERY:"))
        node_line = _field(prompt, "NODE:")
        _, _, node_summary = node_line.partition("|")
        relevant = bool(query_tokens & content_token_set(node_summary))

        best_id, best_overlap = None, 0
        for line in prompt.splitlines():
            if not line.startswith("CHILD:"):
                continue
            child_id, _, summary = line[len("CHILD:"):].partition("|")
            overlap = len(query_tokens & content_token_set(summary))
            if overlap > best_overlap:
                best_id, best_overlap = child_id.strip(), overlap
        expand = best_id if best_id is not None else "none"
        return f"RELEVANT: {'yes' if relevant else 'no'}\nEXPAND: {expand}"

    def _summarize(self, prompt: str, max_tokens: int) -> str:
        body = _block_after(prompt, "BODY:")
        tokens = content_tokens(body)
        if not tokens:
            return ""
        counts = Counter(tokens)
        first_seen = {tok: i for i, tok in reversed(list(enumerate(tokens)))}
        # Top tokens by frequency (ties by first appearance), emitted in
        # order of first appearance.
        ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
        keep = set(ranked[:max_tokens])
        ordered = [t for t in sorted(keep, key=lambda t: first_seen[t])]
        return " ".join(ordered)

    def _generate(self, prompt: str) -> str:
        query_tokens = content_token_set(_field(prompt, "QUERY:"))
        context = _block_after(prompt, "CONTEXT:")
        sentences = split_sentences(context)
        if not sentences:
            return ""
        scores = [len(query_tokens & content_token_set(s)) for s in sentences]
        best = max(scores)
        if best == 0:
            return ""
        return " ".join(s for s, sc in zip(sentences, scores) if sc == best)

    def _judge(self, prompt: str) -> str:
        question = set(t.lower() for t in tokenize(_field(prompt, "QUESTION:")))
        gold = set(t.lower() for t in tokenize(_field(prompt, "GOLD:")))
        cand = set(t.lower() for t in tokenize(_field(prompt, "CANDIDATE:")))
        if not cand:
            accuracy = completeness = relevance = 0.0
        else:
            accuracy = len(cand & gold) / len(cand)
            completeness = len(cand & gold) / len(gold) if gold else 1.0
            relevance = len(cand & (gold | question)) / len(cand)
        return (
            f"ACCURACY: {accuracy:.6f}\n"
            f"COMPLETENESS: {completeness:.6f}\n"
            f"RELEVANCE: {relevance:.6f}\n"
            "RATIONALE: token overlap between candidate and gold answer"
        )

    def _fuse(self, prompt: str) -> str:
        first = _field(prompt, "ANSWER 1:")
        second = _field(prompt, "ANSWER 2:")
        seen: list[str] = []
        for sentence in split_sentences(first) + split_sentences(second):
            if sentence not in seen:
                seen.append(sentence)
        return " ".join(seen)


@dataclass
class RemoteProviderConfig:
    endpoint: str
    model: str
    api_key_env: str = "ADAPTIVERAG_API_KEY"
    timeout_seconds: float = 60.0


class RemoteChatProvider:
    """OpenAI-style chat completions over HTTP."""

    def __init__(self, config: RemoteProviderConfig):
        self.config = config
        self.provider_id = f"remote:{config.model}"

    def complete(self, request: ChatRequest) -> str:
        import httpx

        api_key = os.environ.get(self.config.api_key_env, "")
        if not api_key:
            raise ProviderError(
                f"missing API key in ${self.config.api_key_env}", retryable=False
            )
        payload = {
            "model": self.config.model,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
        }
        try:
            response = httpx.post(
                self.config.endpoint,
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.config.timeout_seconds,
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}", retryable=True) from exc
        if response.status_code in (429, 500, 502, 503, 504):
            raise ProviderError(
                f"retryable status {response.status_code}", retryable=True
            )
        if response.status_code != 200:
            raise ProviderError(
                f"provider error {response.status_code}: {response.text[:200]}",
                retryable=False,
            )
        body = response.json()
        return body["choices"][0]["message"]["content"]


@dataclass
class ChatGateway:
    """Retry, record, and audit every chat call."""

    provider: object = field(default_factory=MockChatProvider)
    retry_cap: int = 3
    backoff_base_seconds: float = 0.5
    audit_path: str | Path | None = None
    records: list[CallRecord] = field(default_factory=list)

    def complete(self, request: ChatRequest) -> str:
        attempts = 0
        start = time.perf_counter()
        while True:
            try:
                reply = self.provider.complete(request)
                break
            except ProviderError as exc:
                if not exc.retryable or attempts >= self.retry_cap:
                    raise
                attempts += 1
                time.sleep(self.backoff_base_seconds * (2 ** (attempts - 1)))
        duration = time.perf_counter() - start
        record = CallRecord(
            request_digest=request.digest(),
            response_digest=hashlib.sha256(reply.encode("utf-8")).hexdigest()[:16],
            duration_seconds=duration,
            provider_id=getattr(self.provider, "provider_id", "unknown"),
            retry_count=attempts,
            tag=request.tag,
        )
        self.records.append(record)
        if self.audit_path is not None:
            with open(self.audit_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.__dict__) + "\n")
        return reply

    def calls_by_tag(self, tag: str) -> list[CallRecord]:
        return [r for r in self.records if r.tag == tag]

"""Vector similarity baseline: token-window chunking, embeddings, exact
cosine top-k search, and answer generation from retrieved chunks.

The corpus is small (tens of documents), so the index is an exhaustive
cosine scan; that keeps the implementation identical to the oracle used
in tests.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import DocumentTree, flatten_sections
from .gateway import ChatGateway, ChatRequest
from .prompts import GENERATE_SYSTEM, generate_user
from .results import RetrievalResult, Strategy
from .text import tokenize

INDEX_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    section_id: str
    token_start: int
    token_end: int
    text: str


class MockEmbeddingProvider:
    """Hashed bag-of-tokens embedding: deterministic and offline.

    Each token hashes to a signed coordinate of a fixed-dimension vector;
    accumulated counts are L2-normalized.
    """

    def __init__(self, dimension: int = 256):
        self.dimension = dimension
        self.provider_id = f"mock-hash-{dimension}"

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dimension
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        return vec / norm


class RemoteEmbeddingProvider:
    """OpenAI-style /embeddings endpoint for live runs."""

    def __init__(self, endpoint: str, model: str, dimension: int,
                 api_key_env: str = "ADAPTIVERAG_API_KEY",
                 timeout_seconds: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.dimension = dimension
        self.api_key_env = api_key_env
        self.timeout_seconds = timeout_seconds
        self.provider_id = f"remote-embed:{model}"

    def embed(self, text: str) -> np.ndarray:
        import os

        import httpx

        from .gateway import ProviderError

        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise ProviderError(f"missing API key in ${self.api_key_env}")
        try:
            response = httpx.post(
                self.endpoint,
                json={"model": self.model, "input": text},
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout_seconds,
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}", retryable=True) from exc
        if response.status_code != 200:
            raise ProviderError(f"embedding error {response.status_code}",
                                retryable=response.status_code in (429, 500, 502, 503))
        values = np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
        norm = np.linalg.norm(values)
        return values / norm if norm else values


def chunk_document(tree: DocumentTree, chunk_size: int = 100,
                   overlap: int = 20) -> list[Chunk]:
    """Window each section body independently with stride chunk_size-overlap."""
    if not 0 <= overlap < chunk_size:
        raise ValueError(f"require 0 <= overlap < chunk_size, got {overlap}/{chunk_size}")
    stride = chunk_size - overlap
    chunks: list[Chunk] = []
    for section_id, _title, body in flatten_sections(tree):
        tokens = tokenize(body)
        if not tokens:
            continue
        index = 0
        for start in range(0, len(tokens), stride):
            end = min(start + chunk_size, len(tokens))
            chunks.append(
                Chunk(
                    chunk_id=f"{section_id}#{index:03d}",
                    doc_id=tree.doc_id,
                    section_id=section_id,
                    token_start=start,
                    token_end=end,
                    text=" ".join(tokens[start:end]),
                )
            )
            index += 1
    return chunks


@dataclass
class VectorIndex:
    dimension: int
    entries: list[tuple[str, np.ndarray]]
    chunk_store: dict[str, Chunk]
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.vstack([vec for _, vec in self.entries])
        return self._matrix

    def save(self, path: str | Path) -> None:
        payload = {
            "schema_version": INDEX_SCHEMA_VERSION,
            "dimension": self.dimension,
            "entries": [
                {"chunk_id": cid, "vector": vec.tolist()} for cid, vec in self.entries
            ],
            "chunks": [chunk.__dict__ for chunk in self.chunk_store.values()],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        version = payload.get("schema_version")
        if version != INDEX_SCHEMA_VERSION:
            raise ValueError(
                f"index schema version {version!r} unsupported "
                f"(expected {INDEX_SCHEMA_VERSION!r})"
            )
        chunks = {c["chunk_id"]: Chunk(**c) for c in payload["chunks"]}
        entries = [
            (e["chunk_id"], np.asarray(e["vector"], dtype=np.float64))
            for e in payload["entries"]
        ]
        return cls(dimension=payload["dimension"], entries=entries, chunk_store=chunks)


def build_index(chunks: list[Chunk], provider) -> VectorIndex:
    """Embed every chunk; the index is immutable afterwards."""
    if not chunks:
        raise ValueError("cannot build an index from zero chunks")
    entries: list[tuple[str, np.ndarray]] = []
    dimension = None
    for chunk in chunks:
        vec = np.asarray(provider.embed(chunk.text), dtype=np.float64)
        if dimension is None:
            dimension = vec.shape[0]
        elif vec.shape[0] != dimension:
            raise ValueError(
                f"embedding dimension mismatch: {vec.shape[0]} != {dimension}"
            )
        entries.append((chunk.chunk_id, vec))
    return VectorIndex(
        dimension=int(dimension),
        entries=entries,
        chunk_store={c.chunk_id: c for c in chunks},
    )


def search(index: VectorIndex, query: str, k: int = 5,
           provider=None) -> list[tuple[Chunk, float]]:
    """Top-k chunks by cosine similarity, ties broken by ascending chunk_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = np.asarray(provider.embed(query), dtype=np.float64)
    scores = index.matrix() @ query_vec
    ranked = sorted(
        zip((cid for cid, _ in index.entries), scores),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return [(index.chunk_store[cid], float(score)) for cid, score in ranked[:k]]


def vector_answer(query: str, index: VectorIndex, embedder, gateway: ChatGateway,
                  k: int = 5, query_id: str = "adhoc") -> RetrievalResult:
    """Retrieve top-k chunks and generate an answer over them."""
    start = time.perf_counter()
    if len(index) == 0:
        raise ValueError("vector index is empty")
    hits = search(index, query, k=k, provider=embedder)
    context = "\n".join(chunk.text for chunk, _ in hits)
    answer = gateway.complete(
        ChatRequest(
            system_prompt=GENERATE_SYSTEM,
            user_prompt=generate_user(query, context),
            tag="generate",
        )
    )
    sections: list[str] = []
    for chunk, _ in hits:
        if chunk.section_id not in sections:
            sections.append(chunk.section_id)
    latency = time.perf_counter() - start
    return RetrievalResult(
        query_id=query_id,
        answer=answer,
        retrieved_sections=sections,
        strategy=Strategy.VECTOR,
        latency_seconds=latency,
        trace={
            "chunks": [chunk.chunk_id for chunk, _ in hits],
            "scores": [score for _, score in hits],
        },
    )


class VectorEngine:
    """Bound index + providers, exposing the per-query answer entry point."""

    def __init__(self, index: VectorIndex, embedder, gateway: ChatGateway, k: int = 5):
        self.index = index
        self.embedder = embedder
        self.gateway = gateway
        self.k = k

    def answer(self, query: str, query_id: str = "adhoc",
               doc_ids: list[str] | None = None) -> RetrievalResult:
        return vector_answer(
            query, self.index, self.embedder, self.gateway, k=self.k, query_id=query_id
        )

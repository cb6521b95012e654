import random

import numpy as np
import pytest

from adaptiverag.corpus import parse_document
from adaptiverag.vector import (
    Chunk,
    MockEmbeddingProvider,
    VectorIndex,
    build_index,
    chunk_document,
    search,
    vector_answer,
)


def make_tree(word_counts):
    """One document with one level-1 section per entry of word_counts."""
    parts = []
    for i, count in enumerate(word_counts):
        body = " ".join(f"w{i}x{j}" for j in range(count))
        parts.append(f"# Section {i}\n{body}\n")
    return parse_document("".join(parts), doc_id="doc", domain="financial")


def test_chunk_worked_example_260_tokens():
    tree = make_tree([260])
    chunks = chunk_document(tree, chunk_size=100, overlap=20)
    assert [c.token_start for c in chunks] == [0, 80, 160, 240]
    assert [c.token_end for c in chunks] == [100, 180, 260, 260]


def test_chunk_short_section_single_chunk():
    chunks = chunk_document(make_tree([50]), chunk_size=100, overlap=20)
    assert len(chunks) == 1
    assert (chunks[0].token_start, chunks[0].token_end) == (0, 50)


def test_chunk_ids_and_section_scoping():
    chunks = chunk_document(make_tree([150, 30]), chunk_size=100, overlap=20)
    assert [c.chunk_id for c in chunks] == [
        "doc:section-0#000", "doc:section-0#001", "doc:section-1#000"
    ]
    # Windows never span sections.
    for chunk in chunks:
        assert len(set(t.split("x")[0] for t in chunk.text.split())) == 1


def test_chunk_rejects_bad_overlap():
    tree = make_tree([10])
    with pytest.raises(ValueError):
        chunk_document(tree, chunk_size=100, overlap=100)
    with pytest.raises(ValueError):
        chunk_document(tree, chunk_size=100, overlap=-1)


def test_mock_embedding_deterministic_unit_norm(embedder):
    a = embedder.embed("revenue grew 12% this quarter")
    b = embedder.embed("revenue grew 12% this quarter")
    assert np.array_equal(a, b)
    assert a.shape == (256,)
    assert np.isclose(np.linalg.norm(a), 1.0)


def test_mock_embedding_empty_text_is_basis_vector(embedder):
    vec = embedder.embed("")
    assert vec[0] == 1.0 and np.linalg.norm(vec) == 1.0


def test_build_index_rejects_empty(embedder):
    with pytest.raises(ValueError):
        build_index([], embedder)


def test_build_index_rejects_dimension_mismatch():
    class Bad:
        def __init__(self):
            self.calls = 0

        def embed(self, text):
            self.calls += 1
            return np.ones(4 if self.calls == 1 else 5)

    chunks = chunk_document(make_tree([10, 10]), 100, 20)
    with pytest.raises(ValueError):
        build_index(chunks, Bad())


def test_index_save_load_round_trip(tmp_path, embedder):
    chunks = chunk_document(make_tree([150, 30]), 100, 20)
    index = build_index(chunks, embedder)
    path = tmp_path / "index.json"
    index.save(path)
    loaded = VectorIndex.load(path)
    assert loaded.dimension == index.dimension
    assert [cid for cid, _ in loaded.entries] == [cid for cid, _ in index.entries]
    for (_, a), (_, b) in zip(loaded.entries, index.entries):
        assert np.allclose(a, b)
    assert loaded.chunk_store == index.chunk_store


def test_index_load_rejects_schema_mismatch(tmp_path, embedder):
    chunks = chunk_document(make_tree([10]), 100, 20)
    index = build_index(chunks, embedder)
    path = tmp_path / "index.json"
    index.save(path)
    text = path.read_text().replace('"schema_version": "1"', '"schema_version": "99"')
    path.write_text(text)
    with pytest.raises(ValueError):
        VectorIndex.load(path)


def brute_force_rank(index, query_vec):
    scored = [(cid, float(vec @ query_vec)) for cid, vec in index.entries]
    return [cid for cid, _ in sorted(scored, key=lambda p: (-p[1], p[0]))]


def test_search_matches_exhaustive_oracle_small(embedder):
    chunks = chunk_document(make_tree([150, 90, 40]), 100, 20)
    index = build_index(chunks, embedder)
    query = "w1x3 w1x4"
    hits = search(index, query, k=3, provider=embedder)
    expected = brute_force_rank(index, embedder.embed(query))[:3]
    assert [c.chunk_id for c, _ in hits] == expected


def test_search_tie_break_is_ascending_chunk_id(embedder):
    # Identical text in two sections -> identical vectors -> id ordering.
    text = "same tokens everywhere"
    chunks = [
        Chunk(chunk_id=f"doc:s#{i:03d}", doc_id="doc", section_id=f"doc:s{i}",
              token_start=0, token_end=3, text=text)
        for i in (2, 0, 1)
    ]
    index = build_index(chunks, embedder)
    hits = search(index, text, k=3, provider=embedder)
    assert [c.chunk_id for c, _ in hits] == ["doc:s#000", "doc:s#001", "doc:s#002"]


def test_search_rejects_bad_k(embedder):
    index = build_index(chunk_document(make_tree([10]), 100, 20), embedder)
    with pytest.raises(ValueError):
        search(index, "q", k=0, provider=embedder)


def test_search_oracle_randomized(embedder):
    rng = random.Random(11)
    vocabulary = [f"tok{i}" for i in range(40)]
    for trial in range(10):
        chunks = [
            Chunk(chunk_id=f"c{j:04d}", doc_id="d", section_id=f"d:s{j}",
                  token_start=0, token_end=5,
                  text=" ".join(rng.choices(vocabulary, k=5)))
            for j in range(rng.randint(5, 60))
        ]
        index = build_index(chunks, embedder)
        query = " ".join(rng.choices(vocabulary, k=3))
        k = rng.randint(1, len(chunks))
        hits = search(index, query, k=k, provider=embedder)
        assert [c.chunk_id for c, _ in hits] == \
            brute_force_rank(index, embedder.embed(query))[:k]


def test_vector_answer_dedupes_sections_and_traces(embedder, gateway):
    chunks = chunk_document(make_tree([150, 30]), 100, 20)
    index = build_index(chunks, embedder)
    result = vector_answer("w0x0 w0x1", index, embedder, gateway, k=3)
    assert result.retrieved_sections == ["doc:section-0", "doc:section-1"]
    assert len(result.trace["chunks"]) == 3
    assert result.latency_seconds >= 0


def test_vector_answer_rejects_empty_index(embedder, gateway):
    index = VectorIndex(dimension=256, entries=[], chunk_store={})
    with pytest.raises(ValueError):
        vector_answer("q", index, embedder, gateway)

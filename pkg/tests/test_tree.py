import pytest

from adaptiverag.corpus import (
    CrossReference,
    parse_document,
    resolve_references,
)
from adaptiverag.gateway import ChatGateway, ChatRequest
from adaptiverag.tree import (
    SummarizationError,
    TreeEngine,
    TreeSelectionError,
    follow_cross_references,
    summarize_tree,
    summarize_tree_cached,
    summary_cache_key,
    tree_answer,
    tree_search,
)

DOC = """# Risk Factors
Overview of risks.

## Market Risk
Interest rate movements affect borrowing costs.

## Hedging Exposure
Commodity hedging downside is quantified in Appendix A.

# Appendix A: Risk Quantification
Tail outcome is a $2.1M reduction in cash flow.
"""


@pytest.fixture
def doc_tree():
    return resolve_references(parse_document(DOC, doc_id="d", domain="financial"))


def test_summaries_cover_every_node(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    assert set(summaries) == set(doc_tree.node_lookup)
    for summary in summaries.values():
        assert summary.summary.strip()


def test_leaf_summary_comes_from_body(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    assert "hedging" in summaries["d:hedging-exposure"].summary


def test_internal_summary_from_title_and_children(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    internal = summaries["d:risk-factors"].summary
    assert "risk" in internal           # from the title
    assert "hedging" in internal        # lifted from a child summary
    assert "overview" not in internal   # own body is not used


def test_empty_leaf_falls_back_to_title(gateway):
    tree = parse_document("# Empty Section\n# Full\nwords here\n",
                          doc_id="d", domain="legal")
    summaries = summarize_tree(tree, gateway)
    assert summaries["d:empty-section"].summary == "Empty Section"


def test_summarize_wraps_gateway_failures(doc_tree):
    class Boom:
        provider_id = "boom"

        def complete(self, request):
            raise RuntimeError("nope")

    with pytest.raises(SummarizationError):
        summarize_tree(doc_tree, ChatGateway(provider=Boom()))


def test_tree_search_descends_to_best_leaf(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    trace = tree_search(doc_tree, summaries, "hedging downside appendix", gateway)
    assert "d:hedging-exposure" in trace.selected
    assert "d:root" not in trace.selected
    assert trace.visited[0] == "d:root"
    assert trace.budget_used == len(trace.visited)


def test_tree_search_respects_budget(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    trace = tree_search(doc_tree, summaries, "hedging downside", gateway, budget=1)
    assert trace.budget_used == 1
    with pytest.raises(ValueError):
        tree_search(doc_tree, summaries, "q", gateway, budget=0)


def test_tree_search_requires_full_summary_coverage(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    summaries.pop("d:market-risk")
    with pytest.raises(ValueError):
        tree_search(doc_tree, summaries, "q", gateway)


def test_tree_search_reprompts_then_fails(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)

    class Garbled:
        provider_id = "garbled"
        calls = 0

        def complete(self, request):
            Garbled.calls += 1
            return "not a selection"

    with pytest.raises(TreeSelectionError):
        tree_search(doc_tree, summaries, "q", ChatGateway(provider=Garbled()))
    assert Garbled.calls == 2


def make_ref_tree(n, edges):
    """n level-1 nodes under a root, with explicit reference edges."""
    text = "".join(f"# N{i}\nbody {i}\n" for i in range(n))
    tree = parse_document(text, doc_id="g", domain="legal")
    for src, dst in edges:
        tree.node_lookup[f"g:n{src}"].cross_refs.append(
            CrossReference(source_node_id=f"g:n{src}", target_label=f"N{dst}",
                           resolved_target_id=f"g:n{dst}")
        )
    return tree


def test_follow_refs_transitive_within_depth():
    tree = make_ref_tree(4, [(0, 1), (1, 2), (2, 3)])
    assert follow_cross_references(tree, {"g:n0"}, max_depth=2) == {
        "g:n0", "g:n1", "g:n2"
    }
    assert follow_cross_references(tree, {"g:n0"}, max_depth=3) == {
        "g:n0", "g:n1", "g:n2", "g:n3"
    }


def test_follow_refs_terminates_on_cycles():
    tree = make_ref_tree(3, [(0, 1), (1, 2), (2, 0)])
    assert follow_cross_references(tree, {"g:n0"}, max_depth=10) == {
        "g:n0", "g:n1", "g:n2"
    }


def test_follow_refs_ignores_unresolved_and_validates_input():
    tree = make_ref_tree(2, [])
    tree.node_lookup["g:n0"].cross_refs.append(
        CrossReference(source_node_id="g:n0", target_label="Nowhere")
    )
    assert follow_cross_references(tree, {"g:n0"}) == {"g:n0"}
    with pytest.raises(KeyError):
        follow_cross_references(tree, {"g:missing"})


def test_tree_answer_includes_referenced_appendix(doc_tree, gateway):
    summaries = summarize_tree(doc_tree, gateway)
    result = tree_answer("hedging downside appendix", doc_tree, summaries, gateway)
    assert "d:appendix-a-risk-quantification" in result.retrieved_sections
    # Sections come back in document order.
    order = [n.node_id for n in doc_tree.document_order()]
    positions = [order.index(s) for s in result.retrieved_sections]
    assert positions == sorted(positions)


def test_summary_cache_round_trip(tmp_path, doc_tree, gateway):
    cache_path = tmp_path / "cache.json"
    first = summarize_tree_cached(doc_tree, gateway, cache_path)
    calls_after_first = len(gateway.records)
    second = summarize_tree_cached(doc_tree, gateway, cache_path)
    assert len(gateway.records) == calls_after_first  # cache hit, no new calls
    assert {k: v.summary for k, v in first.items()} == \
        {k: v.summary for k, v in second.items()}


def test_summary_cache_key_tracks_content_and_model(doc_tree):
    key = summary_cache_key(doc_tree, "mock")
    assert key.startswith("d:") and key.endswith(":mock")
    doc_tree.node_lookup["d:market-risk"].body += " extra"
    assert summary_cache_key(doc_tree, "mock") != key


def test_tree_engine_restricts_to_requested_docs(gateway):
    tree_a = resolve_references(parse_document("# Alpha\nalpha facts here.\n",
                                               doc_id="a", domain="legal"))
    tree_b = resolve_references(parse_document("# Beta\nbeta facts here.\n",
                                               doc_id="b", domain="legal"))
    engine = TreeEngine(
        {"a": tree_a, "b": tree_b},
        {"a": summarize_tree(tree_a, gateway), "b": summarize_tree(tree_b, gateway)},
        gateway,
    )
    result = engine.answer("alpha facts", doc_ids=["a"])
    assert result.retrieved_sections == ["a:alpha"]
    with pytest.raises(KeyError):
        engine.answer("q", doc_ids=["missing"])

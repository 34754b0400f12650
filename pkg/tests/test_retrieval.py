import random

import pytest

from oracles import bfs_within, random_graph
from toolkg.errors import ConfigurationError, ProviderContractError
from toolkg.index import build_embedding_index, build_ngram_index
from toolkg.kg import KnowledgeGraph, Triple
from toolkg.providers import RerankScore
from toolkg.retrieval import (
    RetrievalConfig,
    RetrievalResult,
    Retriever,
    eeg_candidates,
    load_run_log,
    rerank_candidates,
    retrieve_eeg,
    retrieve_hybrid,
    run_record,
    save_run_log,
)

QUERY = "Show me the details of all purchase order items with 'pending' status"


def test_eeg_candidates_match_brute_force():
    rng = random.Random(3)
    for _ in range(30):
        g, plain = random_graph(rng, 30)
        entries = rng.sample(sorted(g.nodes), min(3, len(g.nodes)))
        want = {n for e in entries for n in bfs_within(plain, e, 1) if g.nodes[n].node_type == "tool"}
        assert eeg_candidates(g, entries) == want


def test_toy_query_eeg(toy_graph, embedder, reranker):
    r = Retriever(toy_graph, embedder, reranker)
    res = r.run(QUERY, ["eeg"])["eeg"]
    assert {"po_item_read", "po_item_query"} <= set(res.tool_ids)
    assert len(res.tool_ids) <= 10
    d = res.diagnostics
    assert "capability:detail" in d["entry_textual"]
    assert not d["no_entry_points"] and d["candidate_count"] >= len(res.tool_ids)
    assert r.run(QUERY, ["eeg"])["eeg"].ranked_tools == res.ranked_tools


def test_all_methods_share_query(toy_graph, embedder, reranker):
    out = Retriever(toy_graph, embedder, reranker).run(QUERY)
    assert list(out) == ["lexical", "semantic", "hybrid", "eeg"]
    for res in out.values():
        assert len(res.tool_ids) == len(set(res.tool_ids)) <= 10


def test_no_entry_points(toy_graph, embedder, reranker):
    r = Retriever(toy_graph, embedder, reranker)
    res = r.run("???", ["eeg"])["eeg"]
    assert res.ranked_tools == [] and res.diagnostics["no_entry_points"]


def test_fingerprint_guard(toy_graph, embedder, reranker):
    other = KnowledgeGraph()
    other.add_triple(Triple("x", "tool", "has_parameter", "y", "parameter"))
    stale = build_embedding_index(other.freeze(), embedder)
    with pytest.raises(ConfigurationError):
        retrieve_eeg(QUERY, toy_graph, stale, build_ngram_index(toy_graph), reranker, embedder=embedder)


def test_hybrid_is_reranked_union(reranker):
    sem = RetrievalResult("q", "semantic", [("a", 0.9), ("b", 0.8)])
    lex = RetrievalResult("q", "lexical", [("c", 3.0), ("a", 2.0)])
    docs = {"a": "read order", "b": "list supplier", "c": "order status"}
    res = retrieve_hybrid("order status", sem, lex, reranker, docs, RetrievalConfig(k_final=2))
    assert res.diagnostics["candidates"] == ["a", "b", "c"]
    assert res.tool_ids[0] == "c" and len(res.tool_ids) == 2


def test_reranker_contract():
    class Lossy:
        def rerank(self, query, candidates):
            return [RerankScore(candidates[0][0], 1.0)]

    with pytest.raises(ProviderContractError):
        rerank_candidates("q", [("a", "x"), ("b", "y")], Lossy(), 10)


def test_run_log_roundtrip(tmp_path, toy_graph, embedder, reranker):
    out = Retriever(toy_graph, embedder, reranker).run(QUERY)
    recs = [run_record("q1", res, 10) for res in out.values()]
    path = tmp_path / "run.jsonl"
    save_run_log(recs, path)
    assert load_run_log(path) == recs

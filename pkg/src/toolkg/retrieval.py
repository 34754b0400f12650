"""The four retrieval strategies: ego-graph ensemble (EEG), semantic, lexical
(BM25) and hybrid, all mapping a query to a ranked tool list."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, EmbeddingError, ProviderContractError
from .index import (
    Bm25Index,
    EmbeddingIndex,
    IndexConfig,
    NgramIndex,
    bm25_documents,
    bm25_scores,
    build_bm25_index,
    build_embedding_index,
    build_ngram_index,
    build_tool_index,
    match_ngrams,
    tool_documents,
    top_k_semantic,
)
from .kg import KnowledgeGraph, extract_tool_nodes, one_hop_ego
from .text import tokenize

METHODS = ("lexical", "semantic", "hybrid", "eeg")


@dataclass(frozen=True)
class RetrievalConfig:
    k_final: int = 10
    k_entry_semantic: int = 10
    n_max: int = 3
    min_cosine: float | None = None
    # size of each input list to the hybrid union
    hybrid_k: int = 10

    def __post_init__(self):
        if self.k_final < 1 or self.k_entry_semantic < 1:
            raise ValueError("k_final and k_entry_semantic must be >= 1")


@dataclass
class RetrievalResult:
    query: str
    method: str
    ranked_tools: list[tuple[str, float]]
    diagnostics: dict = field(default_factory=dict)

    @property
    def tool_ids(self) -> list[str]:
        return [t for t, _ in self.ranked_tools]


def rerank_candidates(query: str, candidates: list[tuple[str, str]], reranker, k: int) -> list[tuple[str, float]]:
    if not candidates:
        return []
    scored = reranker.rerank(query, candidates)
    if sorted(s.candidate_ref for s in scored) != sorted(c for c, _ in candidates):
        raise ProviderContractError("reranker output is not a permutation of its candidates")
    return [(s.candidate_ref, s.score) for s in scored[:k]]


def eeg_candidates(graph: KnowledgeGraph, entry_nodes) -> set[str]:
    """Union of tool nodes over the one-hop ego graphs of ``entry_nodes``."""
    tools: set[str] = set()
    for nid in entry_nodes:
        tools |= extract_tool_nodes(one_hop_ego(graph, nid), graph)
    return tools


def _embed_query(query, embedder, query_vec):
    if query_vec is not None:
        return query_vec
    if embedder is None:
        raise ConfigurationError("either an embedder or a precomputed query vector is required")
    try:
        return np.asarray(embedder.embed([query]))[0]
    except (EmbeddingError, ValueError):
        return None


def retrieve_eeg(
    query: str,
    graph: KnowledgeGraph,
    embedding_index: EmbeddingIndex,
    ngram_index: NgramIndex,
    reranker,
    config: RetrievalConfig = RetrievalConfig(),
    embedder=None,
    query_vec=None,
) -> RetrievalResult:
    fp = graph.fingerprint()
    if embedding_index.source_fingerprint != fp or ngram_index.source_fingerprint != fp:
        raise ConfigurationError(
            f"index/graph mismatch: graph {fp}, embedding index built for "
            f"{embedding_index.source_fingerprint}, n-gram index for {ngram_index.source_fingerprint}"
        )
    qv = _embed_query(query, embedder, query_vec)
    semantic = [] if qv is None else top_k_semantic(embedding_index, qv, config.k_entry_semantic, config.min_cosine)
    textual = sorted(match_ngrams(ngram_index, query))
    entries = sorted({n for n, _ in semantic} | set(textual))
    diagnostics = {
        "entry_semantic": [[n, round(c, 10)] for n, c in semantic],
        "entry_textual": textual,
        "entry_nodes": entries,
    }
    if not entries:
        diagnostics.update(no_entry_points=True, candidate_count=0)
        return RetrievalResult(query, "eeg", [], diagnostics)
    tool_nodes = sorted(eeg_candidates(graph, entries))
    candidates = []
    for nid in tool_nodes:
        meta = graph.nodes[nid].metadata
        text = f"{meta.get('title', graph.nodes[nid].name)}. {meta.get('description', '')}".strip()
        candidates.append((meta.get("tool_id", nid), text))
    ranked = rerank_candidates(query, candidates, reranker, config.k_final)
    diagnostics.update(no_entry_points=False, candidate_count=len(candidates))
    return RetrievalResult(query, "eeg", ranked, diagnostics)


def retrieve_semantic(
    query: str,
    tool_index: EmbeddingIndex,
    config: RetrievalConfig = RetrievalConfig(),
    embedder=None,
    query_vec=None,
) -> RetrievalResult:
    qv = _embed_query(query, embedder, query_vec)
    ranked = [] if qv is None else top_k_semantic(tool_index, qv, config.k_final)
    return RetrievalResult(query, "semantic", ranked, {"candidate_count": len(tool_index)})


def retrieve_lexical(query: str, bm25_index: Bm25Index, config: RetrievalConfig = RetrievalConfig()) -> RetrievalResult:
    scores = bm25_scores(bm25_index, tokenize(query, bm25_index.tokenizer))
    diagnostics = {"tokenizer": bm25_index.tokenizer, "field_mode": bm25_index.field_mode, "candidate_count": len(scores)}
    return RetrievalResult(query, "lexical", scores[: config.k_final], diagnostics)


def retrieve_hybrid(
    query: str,
    semantic: RetrievalResult,
    lexical: RetrievalResult,
    reranker,
    documents: dict[str, str],
    config: RetrievalConfig = RetrievalConfig(),
) -> RetrievalResult:
    """Rerank the union of the semantic and lexical top lists."""
    pool = []
    for tid in semantic.tool_ids[: config.hybrid_k] + lexical.tool_ids[: config.hybrid_k]:
        if tid not in pool:
            pool.append(tid)
    ranked = rerank_candidates(query, [(t, documents[t]) for t in pool], reranker, config.k_final)
    return RetrievalResult(query, "hybrid", ranked, {"candidate_count": len(pool), "candidates": sorted(pool)})


class Retriever:
    """All four methods over one frozen graph, sharing query embeddings."""

    def __init__(
        self,
        graph: KnowledgeGraph,
        embedder,
        reranker,
        index_config: IndexConfig = IndexConfig(),
        config: RetrievalConfig = RetrievalConfig(),
        node_index: EmbeddingIndex | None = None,
    ):
        self.graph = graph
        self.embedder = embedder
        self.reranker = reranker
        self.index_config = index_config
        self.config = config
        self.node_index = node_index if node_index is not None else build_embedding_index(graph, embedder)
        self.ngram_index = build_ngram_index(graph, index_config.stopwords, config.n_max)
        docs = tool_documents(graph)
        self.documents = {tid: f"{title}. {desc}".strip() for tid, title, desc in docs}
        self.tool_index = build_tool_index(docs, embedder)
        self.bm25 = build_bm25_index(
            bm25_documents(docs, index_config.field_mode),
            index_config.tokenizer,
            index_config.k1,
            index_config.b,
            index_config.field_mode,
        )

    def run(self, query: str, methods=METHODS) -> dict[str, RetrievalResult]:
        qv = _embed_query(query, self.embedder, None)
        sub = RetrievalConfig(k_final=max(self.config.k_final, self.config.hybrid_k))
        out: dict[str, RetrievalResult] = {}
        sem = lex = None
        if "semantic" in methods or "hybrid" in methods:
            sem = retrieve_semantic(query, self.tool_index, sub, query_vec=qv) if qv is not None else RetrievalResult(query, "semantic", [])
        if "lexical" in methods or "hybrid" in methods:
            lex = retrieve_lexical(query, self.bm25, sub)
        for m in methods:
            if m == "semantic":
                out[m] = RetrievalResult(query, m, sem.ranked_tools[: self.config.k_final], sem.diagnostics)
            elif m == "lexical":
                out[m] = RetrievalResult(query, m, lex.ranked_tools[: self.config.k_final], lex.diagnostics)
            elif m == "hybrid":
                out[m] = retrieve_hybrid(query, sem, lex, self.reranker, self.documents, self.config)
            elif m == "eeg":
                out[m] = retrieve_eeg(
                    query,
                    self.graph,
                    self.node_index,
                    self.ngram_index,
                    self.reranker,
                    self.config,
                    embedder=self.embedder,
                    query_vec=qv,
                )
            else:
                raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        return out


# --------------------------------------------------------------------------
# run log


def run_record(query_id: str, result: RetrievalResult, k: int) -> dict:
    return {
        "query_id": query_id,
        "query": result.query,
        "method": result.method,
        "k": k,
        "ranked_tools": [[t, round(s, 10)] for t, s in result.ranked_tools],
        "diagnostics": result.diagnostics,
    }


def save_run_log(records: list[dict], path) -> None:
    Path(path).write_text(
        "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records), encoding="utf-8"
    )


def load_run_log(path) -> list[dict]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if line.strip():
            out.append(json.loads(line))
    return out

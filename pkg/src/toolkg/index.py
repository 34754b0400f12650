"""Query-time lookup structures: dense node/tool embeddings, exact n-gram
matching over node names, and Okapi BM25 over tool documents."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, GraphParseError, ProviderContractError, ProviderError
from .kg import KnowledgeGraph, Node
from .text import STOPWORDS, TOKENIZER_MODES, name_tokens, tokenize

__all__ = [
    "EmbeddingIndex",
    "NgramIndex",
    "Bm25Index",
    "IndexConfig",
    "tokenize",
    "node_index_text",
    "build_embedding_index",
    "build_tool_index",
    "top_k_semantic",
    "build_ngram_index",
    "match_ngrams",
    "build_bm25_index",
    "bm25_scores",
    "tool_documents",
]

FIELD_MODES = ("description_only", "description_plus_title")


@dataclass(frozen=True)
class IndexConfig:
    tokenizer: str = "word_boundary"
    field_mode: str = "description_plus_title"
    k1: float = 1.5
    b: float = 0.75
    stopwords: frozenset[str] = STOPWORDS
    dim: int = 256
    seed: int = 42

    def __post_init__(self):
        if self.tokenizer not in TOKENIZER_MODES:
            raise ValueError(f"unknown tokenizer {self.tokenizer!r}")
        if self.field_mode not in FIELD_MODES:
            raise ValueError(f"unknown field mode {self.field_mode!r}")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    @staticmethod
    def load_stopwords(path) -> frozenset[str]:
        words = Path(path).read_text(encoding="utf-8").split()
        return frozenset(w.lower() for w in words if not w.startswith("#"))


# --------------------------------------------------------------------------
# dense index


@dataclass
class EmbeddingIndex:
    ids: list[str]
    vectors: np.ndarray
    texts: list[str]
    provider_fingerprint: str
    source_fingerprint: str = ""

    @property
    def dim(self) -> int:
        return self.vectors.shape[1] if self.vectors.ndim == 2 else 0

    def __len__(self):
        return len(self.ids)

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.provider_fingerprint.encode())
        h.update(self.source_fingerprint.encode())
        for i, t in zip(self.ids, self.texts):
            h.update(f"{i}\x1f{t}\x1e".encode("utf-8"))
        h.update(np.ascontiguousarray(self.vectors, dtype=np.float64).tobytes())
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "provider": self.provider_fingerprint,
            "source": self.source_fingerprint,
            "entries": [
                {"id": i, "text": t, "vector": v.tolist()} for i, t, v in zip(self.ids, self.texts, self.vectors)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddingIndex":
        entries = data["entries"]
        vecs = np.array([e["vector"] for e in entries], dtype=float) if entries else np.zeros((0, 0))
        return cls([e["id"] for e in entries], vecs, [e["text"] for e in entries], data["provider"], data["source"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EmbeddingIndex":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError) as exc:
            raise GraphParseError(f"bad embedding index file {path}: {exc}") from None


def node_index_text(node: Node) -> str:
    """Text embedded for a graph node: name, type and (for tools) description."""
    parts = [node.name, node.node_type.replace("_", " ")]
    if node.node_type == "tool" and node.metadata.get("description"):
        parts.append(node.metadata["description"])
    return ". ".join(parts)


def _embed_all(texts, embedder, batch_size, labels):
    chunks = []
    for start in range(0, len(texts), batch_size):
        batch = texts[start : start + batch_size]
        try:
            vecs = np.asarray(embedder.embed(batch), dtype=float)
        except ProviderError as exc:
            raise ProviderError(f"embedding batch starting at {labels[start]!r} failed: {exc}", attempts=exc.attempts) from exc
        if vecs.shape[0] != len(batch):
            raise ProviderContractError(f"embedder returned {vecs.shape[0]} vectors for {len(batch)} texts")
        if chunks and vecs.shape[1] != chunks[0].shape[1]:
            raise ProviderContractError("embedding dim changed between batches")
        chunks.append(vecs)
    return np.vstack(chunks) if chunks else np.zeros((0, 0))


def build_embedding_index(graph: KnowledgeGraph, embedder, batch_size: int = 256) -> EmbeddingIndex:
    nodes = sorted(graph.nodes.values(), key=lambda n: n.id)
    ids = [n.id for n in nodes]
    texts = [node_index_text(n) for n in nodes]
    vecs = _embed_all(texts, embedder, batch_size, ids)
    return EmbeddingIndex(ids, vecs, texts, embedder.fingerprint, graph.fingerprint())


def tool_documents(graph: KnowledgeGraph) -> list[tuple[str, str, str]]:
    """(tool_id, title, description) for every tool node, sorted by tool_id."""
    docs = [
        (n.metadata.get("tool_id", n.id), n.metadata.get("title", n.name), n.metadata.get("description", ""))
        for n in graph.tool_nodes()
    ]
    return sorted(docs)


def build_tool_index(docs: list[tuple[str, str, str]], embedder, batch_size: int = 256) -> EmbeddingIndex:
    """Dense index over tool title + description, for the semantic baseline."""
    docs = sorted(docs)
    ids = [d[0] for d in docs]
    texts = [f"{title}. {desc}".strip() for _, title, desc in docs]
    vecs = _embed_all(texts, embedder, batch_size, ids)
    source = hashlib.sha256("\x1e".join(texts).encode("utf-8")).hexdigest()[:16]
    return EmbeddingIndex(ids, vecs, texts, embedder.fingerprint, source)


def top_k_semantic(
    index: EmbeddingIndex, query_vec: np.ndarray, k: int, min_cosine: float | None = None
) -> list[tuple[str, float]]:
    """Exact top-k by cosine. Ties go to the smaller id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return []
    q = np.asarray(query_vec, dtype=float)
    if q.shape != (index.dim,):
        raise ProviderContractError(f"query dim {q.shape} does not match index dim {index.dim}")
    qn = np.linalg.norm(q)
    norms = np.linalg.norm(index.vectors, axis=1)
    denom = np.where(norms * qn == 0, 1.0, norms * qn)
    cos = (index.vectors @ q) / denom
    order = sorted(range(len(index)), key=lambda i: (-cos[i], index.ids[i]))
    out = [(index.ids[i], float(cos[i])) for i in order]
    if min_cosine is not None:
        out = [(i, c) for i, c in out if c >= min_cosine]
    return out[:k]


# --------------------------------------------------------------------------
# n-gram index


@dataclass
class NgramIndex:
    keys: dict[str, set[str]]
    source_fingerprint: str = ""
    n_max: int = 3
    stopwords: frozenset[str] = STOPWORDS


def build_ngram_index(graph: KnowledgeGraph, stopwords: frozenset[str] = STOPWORDS, n_max: int = 3) -> NgramIndex:
    """Index every node whose canonical name is at most ``n_max`` tokens.

    Names tokenize on non-alphanumerics, so ``report_id`` is keyed as
    ``report id``. Single-token stopword names are skipped.
    """
    keys: dict[str, set[str]] = {}
    for node in graph.nodes.values():
        toks = name_tokens(node.name)
        if not toks or len(toks) > n_max:
            continue
        if len(toks) == 1 and toks[0] in stopwords:
            continue
        keys.setdefault(" ".join(toks), set()).add(node.id)
    return NgramIndex(keys, graph.fingerprint(), n_max, frozenset(stopwords))


def query_ngrams(query: str, n_max: int = 3) -> set[str]:
    toks = name_tokens(query)
    grams = set()
    for n in range(1, n_max + 1):
        for i in range(len(toks) - n + 1):
            grams.add(" ".join(toks[i : i + n]))
    return grams


def match_ngrams(index: NgramIndex, query: str) -> set[str]:
    hits: set[str] = set()
    for gram in query_ngrams(query, index.n_max):
        hits |= index.keys.get(gram, set())
    return hits


# --------------------------------------------------------------------------
# BM25


@dataclass
class Bm25Index:
    doc_ids: list[str]
    term_freqs: list[Counter]
    doc_lengths: list[int]
    doc_freqs: Counter
    k1: float = 1.5
    b: float = 0.75
    tokenizer: str = "word_boundary"
    field_mode: str = "description_plus_title"
    avgdl: float = field(init=False)

    def __post_init__(self):
        if self.k1 <= 0 or not 0 <= self.b <= 1:
            raise ConfigurationError("BM25 needs k1 > 0 and 0 <= b <= 1")
        n = len(self.doc_lengths)
        self.avgdl = sum(self.doc_lengths) / n if n else 0.0

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def idf(self, term: str) -> float:
        df = self.doc_freqs.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def build_bm25_index(
    docs: list[tuple[str, str]],
    tokenizer: str = "word_boundary",
    k1: float = 1.5,
    b: float = 0.75,
    field_mode: str = "description_plus_title",
) -> Bm25Index:
    """Index ``(doc_id, text)`` pairs. ``field_mode`` is recorded, not applied;
    see :func:`bm25_documents`."""
    tfs = [Counter(tokenize(text, tokenizer)) for _, text in docs]
    df: Counter = Counter()
    for tf in tfs:
        df.update(tf.keys())
    return Bm25Index([d for d, _ in docs], tfs, [sum(tf.values()) for tf in tfs], df, k1, b, tokenizer, field_mode)


def bm25_documents(tools: list[tuple[str, str, str]], field_mode: str = "description_plus_title") -> list[tuple[str, str]]:
    if field_mode == "description_only":
        return [(tid, desc) for tid, _, desc in tools]
    if field_mode == "description_plus_title":
        return [(tid, f"{title} {desc}") for tid, title, desc in tools]
    raise ValueError(f"unknown field mode {field_mode!r}")


def bm25_scores(index: Bm25Index, query_tokens: list[str]) -> list[tuple[str, float]]:
    """Okapi BM25 with ``idf = ln(1 + (N - df + .5) / (df + .5))``.

    Repeated query tokens count once per occurrence. Zero-score documents are
    omitted; ties go to the smaller doc id.
    """
    if index.n_docs == 0:
        return []
    k1, b = index.k1, index.b
    idf = {t: index.idf(t) for t in set(query_tokens)}
    out = []
    for doc_id, tf, dl in zip(index.doc_ids, index.term_freqs, index.doc_lengths):
        norm = k1 * (1.0 - b + b * dl / index.avgdl) if index.avgdl else k1
        s = 0.0
        for t in query_tokens:
            f = tf.get(t, 0)
            if f:
                s += idf[t] * f * (k1 + 1.0) / (f + norm)
        if s > 0.0:
            out.append((doc_id, s))
    out.sort(key=lambda x: (-x[1], x[0]))
    return out

"""Embedding, reranking and structured-generation providers.

Every provider kind has a deterministic local implementation (used by the
tests and the bundled benchmark) and an HTTP client with a plain JSON wire
contract:

=========  ===============================================  ==============================
endpoint   request body                                     response body
=========  ===============================================  ==============================
embed      ``{"texts": [str, ...]}``                        ``{"vectors": [[float], ...]}``
rerank     ``{"query": str, "candidates": [{"id", "text"}]}``  ``{"scores": [float, ...]}``
generate   ``{"prompt": str, "schema": str}``               ``{"text": str}``
=========  ===============================================  ==============================

Remote endpoints and the bearer token come from ``PROVIDER_EMBED_URL``,
``PROVIDER_RERANK_URL``, ``PROVIDER_GEN_URL`` and ``PROVIDER_API_KEY``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Protocol

import jsonschema
import numpy as np

from .errors import (
    CacheMissError,
    EmbeddingError,
    GeneratorFormatError,
    ProviderContractError,
    ProviderError,
)
from .text import STOPWORDS, name_tokens

log = logging.getLogger(__name__)

DEFAULT_DIM = 256
DEFAULT_SEED = 42

# --------------------------------------------------------------------------
# embeddings


@lru_cache(maxsize=65536)
def _hash_token(token: str, dim: int, seed: int) -> tuple[int, float]:
    digest = hashlib.blake2b(f"{seed}\x1f{token}".encode("utf-8"), digest_size=8).digest()
    h = int.from_bytes(digest, "little")
    return h % dim, 1.0 if (h >> 63) & 1 else -1.0


def local_embed(text: str, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Feature-hash the bag of canonical tokens into ``dim`` signed buckets.

    The result is L2-normalized and independent of token order.
    """
    if dim < 8:
        raise ValueError("dim must be at least 8")
    tokens = name_tokens(text)
    if not tokens:
        raise EmbeddingError(f"no tokens to embed in {text!r}")
    vec = np.zeros(dim)
    for tok in tokens:
        bucket, sign = _hash_token(tok, dim, seed)
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise EmbeddingError(f"hashed features of {text!r} cancel to the zero vector")
    return vec / norm


class Embedder(Protocol):
    fingerprint: str

    def embed(self, texts: list[str]) -> np.ndarray: ...


class LocalEmbedder:
    def __init__(self, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED):
        if dim < 8:
            raise ValueError("dim must be at least 8")
        self.dim = dim
        self.seed = seed

    @property
    def fingerprint(self) -> str:
        return f"local-hash:dim={self.dim}:seed={self.seed}"

    def embed(self, texts: list[str]) -> np.ndarray:
        _check_texts(texts)
        return np.stack([local_embed(t, self.dim, self.seed) for t in texts])


def _check_texts(texts):
    if not texts:
        raise ValueError("embed() needs at least one text")
    for i, t in enumerate(texts):
        if not isinstance(t, str) or not t.strip():
            raise ValueError(f"text {i} is empty")


# --------------------------------------------------------------------------
# HTTP transport


def _post_json(url: str, payload: dict, api_key: str | None, timeout: float, retries: int) -> dict:
    body = json.dumps(payload).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last: Exception | None = None
    for attempt in range(1, retries + 2):
        req = urllib.request.Request(url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            if exc.code in (401, 403):
                raise ProviderError(f"{url}: authentication failed ({exc.code})", attempts=attempt) from exc
            last = exc
            if exc.code < 500 and exc.code != 429:
                raise ProviderError(f"{url}: HTTP {exc.code}", attempts=attempt) from exc
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            last = exc
        except json.JSONDecodeError as exc:
            raise ProviderContractError(f"{url}: response is not JSON", attempts=attempt) from exc
        if attempt <= retries:
            time.sleep(min(0.1 * 2 ** (attempt - 1), 2.0))
    raise ProviderError(f"{url}: request failed after {retries + 1} attempts: {last}", attempts=retries + 1, retryable=True)


@dataclass
class RemoteConfig:
    url: str
    api_key: str | None = None
    timeout: float = 30.0
    retries: int = 2


class RemoteEmbedder:
    def __init__(self, config: RemoteConfig):
        self.config = config
        self.dim: int | None = None

    @property
    def fingerprint(self) -> str:
        return f"remote:{self.config.url}:dim={self.dim}"

    def embed(self, texts: list[str]) -> np.ndarray:
        _check_texts(texts)
        c = self.config
        data = _post_json(c.url, {"texts": list(texts)}, c.api_key, c.timeout, c.retries)
        vectors = data.get("vectors") if isinstance(data, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderContractError(f"{c.url}: expected {len(texts)} vectors")
        arr = np.asarray(vectors, dtype=float)
        if arr.ndim != 2 or not np.all(np.isfinite(arr)):
            raise ProviderContractError(f"{c.url}: vectors must be a finite rectangular array")
        if self.dim is None:
            self.dim = arr.shape[1]
        elif arr.shape[1] != self.dim:
            raise ProviderContractError(f"{c.url}: embedding dim drifted from {self.dim} to {arr.shape[1]}")
        return arr


# --------------------------------------------------------------------------
# reranking


@dataclass(frozen=True, order=True)
class RerankScore:
    candidate_ref: str
    score: float


def sort_scores(scores: list[RerankScore]) -> list[RerankScore]:
    """Descending score, ties broken by ascending id."""
    return sorted(scores, key=lambda s: (-s.score, s.candidate_ref))


class Reranker(Protocol):
    def rerank(self, query: str, candidates: list[tuple[str, str]]) -> list[RerankScore]: ...


class LocalReranker:
    """Joint query/candidate scorer standing in for a cross-encoder.

    Score is ``(1 - overlap_weight) * cosine + overlap_weight * coverage``,
    where coverage is the share of the query's content tokens that occur in
    the candidate text. With ``overlap_weight=0`` it reduces to plain cosine.
    """

    def __init__(self, embedder: LocalEmbedder | None = None, overlap_weight: float = 0.5):
        if not 0.0 <= overlap_weight <= 1.0:
            raise ValueError("overlap_weight must be in [0, 1]")
        self.embedder = embedder or LocalEmbedder()
        self.overlap_weight = overlap_weight

    def rerank(self, query: str, candidates: list[tuple[str, str]]) -> list[RerankScore]:
        if not candidates:
            raise ValueError("rerank() needs at least one candidate")
        dim, seed = self.embedder.dim, self.embedder.seed
        try:
            q = local_embed(query, dim, seed)
        except EmbeddingError:
            q = None
        q_terms = set(name_tokens(query)) - STOPWORDS
        w = self.overlap_weight
        out = []
        for cid, text in candidates:
            cos = 0.0
            if q is not None:
                try:
                    cos = float(q @ local_embed(text, dim, seed))
                except EmbeddingError:
                    pass
            cover = len(q_terms & set(name_tokens(text))) / len(q_terms) if q_terms else 0.0
            out.append(RerankScore(cid, (1.0 - w) * cos + w * cover))
        return sort_scores(out)


class RemoteReranker:
    def __init__(self, config: RemoteConfig):
        self.config = config

    def rerank(self, query: str, candidates: list[tuple[str, str]]) -> list[RerankScore]:
        if not candidates:
            raise ValueError("rerank() needs at least one candidate")
        c = self.config
        payload = {"query": query, "candidates": [{"id": cid, "text": text} for cid, text in candidates]}
        data = _post_json(c.url, payload, c.api_key, c.timeout, c.retries)
        scores = data.get("scores") if isinstance(data, dict) else None
        if not isinstance(scores, list) or len(scores) != len(candidates):
            raise ProviderContractError(f"{c.url}: expected one score per candidate")
        out = []
        for (cid, _), s in zip(candidates, scores):
            if not isinstance(s, (int, float)) or isinstance(s, bool) or not math.isfinite(s):
                raise ProviderContractError(f"{c.url}: missing or non-finite score for candidate {cid!r}")
            out.append(RerankScore(cid, float(s)))
        return sort_scores(out)


# --------------------------------------------------------------------------
# structured generation

QUERY_CLASSES = (
    "single-intent",
    "multi-intent",
    "explicit-multi-step",
    "implicit-multi-step",
    "conditional-multi-step",
    "ir-multi-intent",
)

SCHEMAS: dict[str, dict] = {
    "triples": {
        "type": "object",
        "required": ["relationships"],
        "properties": {
            "relationships": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["head", "tail", "relationship"],
                    "properties": {
                        "head": {"type": "string"},
                        "tail": {"type": "string"},
                        "relationship": {"type": "string"},
                    },
                },
            }
        },
    },
    "outputs": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["parameter_name", "parameter_id", "confidence_score"],
            "properties": {
                "parameter_name": {"type": "string"},
                "parameter_id": {"type": "string"},
                "confidence_score": {"type": "number", "minimum": 0, "maximum": 1},
                "reasoning": {"type": "string"},
            },
        },
    },
    "sequence": {
        "type": "object",
        "required": ["is_valid"],
        "properties": {
            "from_scenario_id": {"type": "string"},
            "to_scenario_id": {"type": "string"},
            "is_valid": {"type": "boolean"},
            "explanation": {"type": "string"},
        },
    },
    "queries": {
        "type": "object",
        "required": ["queries"],
        "properties": {
            "queries": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["query_class", "query"],
                    "properties": {
                        "query_class": {"enum": list(QUERY_CLASSES)},
                        "query": {"type": "string"},
                    },
                },
            }
        },
    },
}

CANNED_MINIMA = {
    "triples": {"relationships": []},
    "outputs": [],
    "sequence": {"is_valid": False, "explanation": "no cached verdict"},
    "queries": {"queries": []},
}


@dataclass(frozen=True)
class GeneratorRequest:
    prompt: str
    schema: str
    context: dict = field(default_factory=dict, compare=False, hash=False)
    key_hint: str = ""

    def __post_init__(self):
        if self.schema not in SCHEMAS:
            raise ValueError(f"unknown schema tag {self.schema!r}; expected one of {sorted(SCHEMAS)}")

    @property
    def cache_key(self) -> str:
        return hashlib.sha256(f"{self.schema}\n{self.prompt}".encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GeneratorResponse:
    raw_text: str
    value: object


_FENCE = re.compile(r"^\s*```(?:json)?\s*(.*?)\s*```\s*$", re.S)


def parse_generator_output(raw_text: str, schema: str) -> GeneratorResponse:
    """Parse raw model text and validate it against ``schema``."""
    text = raw_text
    m = _FENCE.match(text)
    if m:
        text = m.group(1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeneratorFormatError(f"generator output is not JSON ({exc.msg})", raw_text) from None
    try:
        jsonschema.validate(value, SCHEMAS[schema])
    except jsonschema.ValidationError as exc:
        raise GeneratorFormatError(f"generator output violates {schema!r} schema: {exc.message}", raw_text) from None
    return GeneratorResponse(raw_text, value)


class Generator(Protocol):
    def generate(self, request: GeneratorRequest) -> GeneratorResponse: ...


class TranscriptCache:
    """Recorded generator responses, one JSON object per line.

    Lines look like ``{"key": <sha256 of schema+prompt>, "schema": ..., "hint": <tool id>, "text": ...}``.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").split("\n"):
                if line.strip():
                    rec = json.loads(line)
                    self._entries[rec["key"]] = rec

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get(self, request: GeneratorRequest) -> str | None:
        rec = self._entries.get(request.cache_key)
        return None if rec is None else rec["text"]

    def put(self, request: GeneratorRequest, text: str) -> None:
        with self._lock:
            self._entries[request.cache_key] = {
                "key": request.cache_key,
                "schema": request.schema,
                "hint": request.key_hint,
                "text": text,
            }

    def save(self, path=None) -> None:
        path = Path(path or self.path)
        with self._lock:
            recs = sorted(self._entries.values(), key=lambda r: (r["hint"], r["key"]))
            path.write_text(
                "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in recs),
                encoding="utf-8",
            )


class TranscriptGenerator:
    """Replays cached responses.

    On a miss: strict mode raises :class:`CacheMissError`; otherwise the
    ``fallback`` generator answers, or a schema-valid empty response is returned.
    """

    def __init__(self, cache: TranscriptCache | None = None, strict: bool = False, fallback: Generator | None = None):
        self.cache = cache or TranscriptCache()
        self.strict = strict
        self.fallback = fallback

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        text = self.cache.get(request)
        if text is not None:
            return parse_generator_output(text, request.schema)
        if self.strict:
            raise CacheMissError(f"no transcript for {request.schema} request {request.key_hint or request.cache_key[:12]}")
        if self.fallback is not None:
            return self.fallback.generate(request)
        text = json.dumps(CANNED_MINIMA[request.schema])
        return parse_generator_output(text, request.schema)


class RecordingGenerator:
    """Forwards to ``inner`` and stores every raw response in ``cache``."""

    def __init__(self, inner: Generator, cache: TranscriptCache):
        self.inner = inner
        self.cache = cache

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        response = self.inner.generate(request)
        self.cache.put(request, response.raw_text)
        return response


class RemoteGenerator:
    def __init__(self, config: RemoteConfig):
        self.config = config

    def generate(self, request: GeneratorRequest) -> GeneratorResponse:
        c = self.config
        data = _post_json(c.url, {"prompt": request.prompt, "schema": request.schema}, c.api_key, c.timeout, c.retries)
        if not isinstance(data, dict) or not isinstance(data.get("text"), str):
            raise ProviderContractError(f"{c.url}: generator response lacks a 'text' field")
        return parse_generator_output(data["text"], request.schema)


def remote_providers_from_env(env=None):
    """Build (embedder, reranker, generator) clients from environment variables.

    Any endpoint that is not configured comes back as ``None``.
    """
    env = os.environ if env is None else env
    key = env.get("PROVIDER_API_KEY")
    def make(var, cls):
        url = env.get(var)
        return cls(RemoteConfig(url, key)) if url else None
    return (
        make("PROVIDER_EMBED_URL", RemoteEmbedder),
        make("PROVIDER_RERANK_URL", RemoteReranker),
        make("PROVIDER_GEN_URL", RemoteGenerator),
    )

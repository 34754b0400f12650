import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toolkg.errors import CacheMissError, EmbeddingError, GeneratorFormatError, ProviderContractError, ProviderError
from toolkg.providers import (
    GeneratorRequest,
    LocalEmbedder,
    LocalReranker,
    RecordingGenerator,
    RemoteConfig,
    RemoteEmbedder,
    RemoteGenerator,
    RemoteReranker,
    TranscriptCache,
    TranscriptGenerator,
    local_embed,
    parse_generator_output,
    remote_providers_from_env,
)
from toolkg.templating import TemplateGenerator


def test_local_embed_normalized_and_deterministic():
    a = local_embed("purchase order item")
    assert a.shape == (256,)
    assert np.isclose(np.linalg.norm(a), 1.0)
    assert np.array_equal(a, local_embed("purchase order item"))
    assert np.array_equal(a, local_embed("Items, order: purchase"))
    assert not np.array_equal(a, local_embed("purchase order item", seed=7))


def test_local_embed_errors():
    with pytest.raises(EmbeddingError):
        local_embed("!!! ---")
    with pytest.raises(ValueError):
        LocalEmbedder(dim=4)
    with pytest.raises(ValueError):
        LocalEmbedder().embed([])
    with pytest.raises(ValueError):
        LocalEmbedder().embed(["ok", "  "])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("alpha beta gamma delta order item id".split()), min_size=1, max_size=8))
def test_local_embed_matches_hash_oracle(words):
    import hashlib

    vec = np.zeros(64)
    for w in words:
        from toolkg.text import singularize

        tok = singularize(w)
        h = int.from_bytes(hashlib.blake2b(f"42\x1f{tok}".encode(), digest_size=8).digest(), "little")
        vec[h % 64] += 1.0 if (h >> 63) & 1 else -1.0
    if np.linalg.norm(vec) == 0:
        with pytest.raises(EmbeddingError):
            local_embed(" ".join(words), dim=64)
        return
    assert np.allclose(local_embed(" ".join(words), dim=64), vec / np.linalg.norm(vec), atol=1e-12)


def test_local_reranker_orders_and_ties():
    rr = LocalReranker()
    out = rr.rerank("read purchase order", [("b", "update supplier"), ("a", "read purchase order"), ("c", "update supplier")])
    assert [s.candidate_ref for s in out] == ["a", "b", "c"]
    assert out[0].score == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rr.rerank("q", [])
    plain = LocalReranker(overlap_weight=0.0).rerank("read order", [("x", "read order")])
    assert plain[0].score == pytest.approx(1.0)


def test_parse_generator_output():
    resp = parse_generator_output('```json\n{"is_valid": true}\n```', "sequence")
    assert resp.value == {"is_valid": True}
    with pytest.raises(GeneratorFormatError):
        parse_generator_output("nope", "sequence")
    with pytest.raises(GeneratorFormatError):
        parse_generator_output('[{"parameter_name": "a", "parameter_id": "a", "confidence_score": 1.5}]', "outputs")
    with pytest.raises(ValueError):
        GeneratorRequest("p", "poetry")


def test_transcript_cache_roundtrip(tmp_path):
    path = tmp_path / "t.jsonl"
    req = GeneratorRequest("prompt", "sequence", key_hint="a->b")
    cache = TranscriptCache(path)
    cache.put(req, '{"is_valid": true, "explanation": "ok"}')
    cache.save()
    replay = TranscriptGenerator(TranscriptCache(path), strict=True)
    assert replay.generate(req).value["is_valid"] is True
    with pytest.raises(CacheMissError):
        replay.generate(GeneratorRequest("other", "sequence"))
    lenient = TranscriptGenerator(TranscriptCache(path))
    assert lenient.generate(GeneratorRequest("other", "outputs")).value == []


def test_recording_generator(tmp_path):
    cache = TranscriptCache(tmp_path / "rec.jsonl")
    gen = RecordingGenerator(TemplateGenerator(), cache)
    req = GeneratorRequest("x", "triples", context={"tool": {"tool_id": "t", "title": "T"}}, key_hint="t")
    gen.generate(req)
    assert req.cache_key in cache
    cache.save()
    assert json.loads((tmp_path / "rec.jsonl").read_text())["hint"] == "t"


class _Stub(BaseHTTPRequestHandler):
    routes = {}
    seen = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        _Stub.seen.append((self.path, self.headers.get("Authorization"), body))
        status, reply = _Stub.routes[self.path](body)
        data = json.dumps(reply).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Stub)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    _Stub.seen.clear()
    yield f"http://127.0.0.1:{srv.server_port}"
    srv.shutdown()


def test_remote_clients_wire_format(server):
    _Stub.routes = {
        "/embed": lambda b: (200, {"vectors": [[1.0, 0.0]] * len(b["texts"])}),
        "/rerank": lambda b: (200, {"scores": [0.1, 0.9]}),
        "/gen": lambda b: (200, {"text": '{"is_valid": false}'}),
    }
    emb = RemoteEmbedder(RemoteConfig(server + "/embed", "secret"))
    assert emb.embed(["a", "b"]).shape == (2, 2)
    rr = RemoteReranker(RemoteConfig(server + "/rerank"))
    assert [s.candidate_ref for s in rr.rerank("q", [("x", "tx"), ("y", "ty")])] == ["y", "x"]
    gen = RemoteGenerator(RemoteConfig(server + "/gen"))
    assert gen.generate(GeneratorRequest("p", "sequence")).value == {"is_valid": False}
    paths = [(p, auth) for p, auth, _ in _Stub.seen]
    assert paths == [("/embed", "Bearer secret"), ("/rerank", None), ("/gen", None)]
    assert _Stub.seen[1][2] == {"query": "q", "candidates": [{"id": "x", "text": "tx"}, {"id": "y", "text": "ty"}]}
    assert _Stub.seen[2][2] == {"prompt": "p", "schema": "sequence"}


def test_remote_contract_violations(server):
    _Stub.routes = {
        "/short": lambda b: (200, {"vectors": [[1.0]]}),
        "/nan": lambda b: (200, {"scores": [None, 1.0]}),
        "/auth": lambda b: (401, {}),
        "/down": lambda b: (503, {}),
    }
    with pytest.raises(ProviderContractError):
        RemoteEmbedder(RemoteConfig(server + "/short")).embed(["a", "b"])
    with pytest.raises(ProviderContractError):
        RemoteReranker(RemoteConfig(server + "/nan")).rerank("q", [("x", "a"), ("y", "b")])
    with pytest.raises(ProviderError, match="authentication"):
        RemoteEmbedder(RemoteConfig(server + "/auth", retries=3)).embed(["a"])
    assert len(_Stub.seen) == 3
    with pytest.raises(ProviderError) as info:
        RemoteEmbedder(RemoteConfig(server + "/down", retries=1)).embed(["a"])
    assert info.value.attempts == 2 and info.value.retryable


def test_remote_dim_drift(server):
    dims = iter([2, 3])
    _Stub.routes = {"/e": lambda b: (200, {"vectors": [[0.5] * next(dims)]})}
    emb = RemoteEmbedder(RemoteConfig(server + "/e"))
    emb.embed(["a"])
    with pytest.raises(ProviderContractError, match="drifted"):
        emb.embed(["b"])


def test_remote_providers_from_env():
    emb, rr, gen = remote_providers_from_env({"PROVIDER_EMBED_URL": "http://x", "PROVIDER_API_KEY": "k"})
    assert emb.config.api_key == "k" and rr is None and gen is None

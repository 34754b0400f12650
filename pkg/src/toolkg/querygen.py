"""Synthetic multi-step benchmark queries from tool dependency structure.

Pipeline: parameter-similarity (P-P) graph, generator-inferred
output-to-input (R-P) graph, pairwise-validated path enumeration, query
generation per class, and three validation gates.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .catalog import Catalog, ToolSpec
from .errors import CacheMissError, GeneratorFormatError, IncompatibleClassError
from .prompts import render_outputs, render_queries, render_sequence
from .providers import QUERY_CLASSES, GeneratorRequest
from .text import canonicalize_entity

log = logging.getLogger(__name__)

MULTI_CLASSES = tuple(c for c in QUERY_CLASSES if c != "single-intent")


# --------------------------------------------------------------------------
# P-P graph


@dataclass
class PPGraph:
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], float]
    tau: float

    def weight(self, a: str, b: str) -> float | None:
        return self.edges.get((a, b) if a < b else (b, a))

    def neighbors(self, a: str) -> dict[str, float]:
        out = {}
        for (x, y), w in self.edges.items():
            if x == a:
                out[y] = w
            elif y == a:
                out[x] = w
        return out

    def degree(self, a: str) -> int:
        return len(self.neighbors(a))


def _param_text(p) -> str:
    return f"{p.name} {p.description}".strip()


def pp_weights(catalog: Catalog, embedder) -> dict[tuple[str, str], float]:
    """Max cross-product cosine of input-parameter embeddings for every tool pair."""
    owners, texts = [], []
    for tool in catalog:
        for p in tool.parameters:
            owners.append(tool.tool_id)
            texts.append(_param_text(p))
    if not texts:
        return {}
    vecs = np.asarray(embedder.embed(texts), dtype=float)
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    sims = vecs @ vecs.T
    rows: dict[str, list[int]] = {}
    for i, owner in enumerate(owners):
        rows.setdefault(owner, []).append(i)
    ids = sorted(rows)
    out = {}
    for ai, a in enumerate(ids):
        for b in ids[ai + 1 :]:
            w = float(sims[np.ix_(rows[a], rows[b])].max())
            out[(a, b)] = min(round(w, 12), 1.0)
    return out


def build_pp_graph(catalog: Catalog, embedder, tau: float = 0.8) -> PPGraph:
    if not 0 < tau <= 1:
        raise ValueError("tau must be in (0, 1]")
    weights = pp_weights(catalog, embedder)
    edges = {pair: w for pair, w in weights.items() if w >= tau}
    return PPGraph(tuple(catalog.tool_ids), edges, tau)


def pp_threshold_sweep(catalog: Catalog, embedder, taus) -> list[dict]:
    """Edge count and isolated-tool count of the P-P graph for each threshold."""
    weights = pp_weights(catalog, embedder)
    rows = []
    for tau in taus:
        kept = [pair for pair, w in weights.items() if w >= tau]
        touched = {t for pair in kept for t in pair}
        rows.append({"tau": tau, "edges": len(kept), "isolated": len(catalog) - len(touched)})
    return rows


# --------------------------------------------------------------------------
# R-P graph


@dataclass(frozen=True)
class InferredOutput:
    tool_id: str
    parameter_name: str
    parameter_id: str
    confidence: float
    reasoning: str = ""


def available_params(catalog: Catalog, tool: ToolSpec) -> list[dict]:
    """Candidate outputs for ``tool``: every other tool's input, by canonical name."""
    own = {canonicalize_entity(p.name) for p in tool.parameters}
    seen: dict[str, str] = {}
    for other in catalog:
        if other.tool_id == tool.tool_id:
            continue
        for p in other.parameters:
            key = canonicalize_entity(p.name)
            if key not in own:
                seen.setdefault(key, p.name)
    return [{"parameter_name": seen[k], "parameter_id": k} for k in sorted(seen)]


def infer_outputs(tool: ToolSpec, available: list[dict], generator, floor: float = 0.5) -> list[InferredOutput]:
    if not available:
        raise ValueError("available parameter list is empty")
    request = GeneratorRequest(
        render_outputs(tool, available),
        "outputs",
        context={"tool": tool.to_dict(), "available_params": available},
        key_hint=tool.tool_id,
    )
    response = generator.generate(request)
    allowed = {(a["parameter_name"], a["parameter_id"]) for a in available}
    picked: dict[str, InferredOutput] = {}
    for item in response.value:
        key = (item["parameter_name"], item["parameter_id"])
        if key not in allowed:
            log.warning("tool %s: output %r is not an available parameter; dropped", tool.tool_id, key)
            continue
        conf = float(item["confidence_score"])
        if conf < floor:
            continue
        prev = picked.get(item["parameter_id"])
        if prev is None or conf > prev.confidence:
            picked[item["parameter_id"]] = InferredOutput(
                tool.tool_id, item["parameter_name"], item["parameter_id"], conf, item.get("reasoning", "")
            )
    ranked = sorted(picked.values(), key=lambda o: (-o.confidence, o.parameter_id))
    if len(ranked) > 3:
        log.warning("tool %s: %d outputs inferred, keeping the top 3", tool.tool_id, len(ranked))
    return ranked[:3]


@dataclass(frozen=True)
class RPEdge:
    parameter: str
    confidence: float


@dataclass
class RPGraph:
    edges: dict[tuple[str, str], RPEdge] = field(default_factory=dict)

    def successors(self, a: str) -> dict[str, RPEdge]:
        return {c: e for (p, c), e in self.edges.items() if p == a}

    def out_degree(self, a: str) -> int:
        return len(self.successors(a))


def build_rp_graph(catalog: Catalog, inferred: list[InferredOutput], floor: float = 0.5) -> RPGraph:
    """Producer -> consumer edges where an inferred output names a consumer input."""
    consumers: dict[str, set[str]] = {}
    for tool in catalog:
        for p in tool.parameters:
            consumers.setdefault(canonicalize_entity(p.name), set()).add(tool.tool_id)
    edges: dict[tuple[str, str], RPEdge] = {}
    for out in inferred:
        if out.confidence < floor:
            continue
        key = canonicalize_entity(out.parameter_name)
        for consumer in sorted(consumers.get(key, ())):
            if consumer == out.tool_id:
                continue
            edge = RPEdge(key, out.confidence)
            prev = edges.get((out.tool_id, consumer))
            if prev is None or (-edge.confidence, edge.parameter) < (-prev.confidence, prev.parameter):
                edges[(out.tool_id, consumer)] = edge
    return RPGraph(edges)


# --------------------------------------------------------------------------
# sequence validation and path enumeration


@dataclass(frozen=True)
class SequenceVerdict:
    is_valid: bool
    explanation: str = ""


def validate_sequence(pair: tuple[ToolSpec, ToolSpec], generator) -> SequenceVerdict:
    first, second = pair
    request = GeneratorRequest(
        render_sequence(first, second),
        "sequence",
        context={"from": first.to_dict(), "to": second.to_dict()},
        key_hint=f"{first.tool_id}->{second.tool_id}",
    )
    try:
        value = generator.generate(request).value
    except CacheMissError as exc:
        log.info("no cached verdict for %s -> %s, treating as invalid: %s", first.tool_id, second.tool_id, exc)
        return SequenceVerdict(False, "no cached verdict (strict offline)")
    return SequenceVerdict(bool(value["is_valid"]), value.get("explanation", ""))


class PairValidator:
    """Memoized ``validate_sequence`` keyed by tool-id pair."""

    def __init__(self, catalog: Catalog, generator):
        self.tools = catalog.by_id
        self.generator = generator
        self.verdicts: dict[tuple[str, str], SequenceVerdict] = {}

    def __call__(self, a: str, b: str) -> bool:
        if (a, b) not in self.verdicts:
            self.verdicts[(a, b)] = validate_sequence((self.tools[a], self.tools[b]), self.generator)
        return self.verdicts[(a, b)].is_valid


@dataclass(frozen=True)
class ToolChain:
    tools: tuple[str, ...]
    hops: tuple[str, ...] = ()

    def __post_init__(self):
        if len(set(self.tools)) != len(self.tools):
            raise ValueError(f"chain repeats a tool: {self.tools}")
        if len(self.hops) != max(len(self.tools) - 1, 0):
            raise ValueError("one hop label per consecutive pair is required")

    def __len__(self):
        return len(self.tools)


def _successors(pp: PPGraph, rp: RPGraph):
    rp_out: dict[str, list[tuple[str, float]]] = {}
    for (a, b), e in rp.edges.items():
        rp_out.setdefault(a, []).append((b, e.confidence))
    pp_out: dict[str, list[tuple[str, float]]] = {}
    for (a, b), w in pp.edges.items():
        pp_out.setdefault(a, []).append((b, w))
        pp_out.setdefault(b, []).append((a, w))
    succ = {}
    for a in set(rp_out) | set(pp_out):
        ordered = [(b, "rp") for b, _ in sorted(rp_out.get(a, []), key=lambda x: (-x[1], x[0]))]
        listed = {b for b, _ in ordered}
        ordered += [(b, "pp") for b, _ in sorted(pp_out.get(a, []), key=lambda x: (-x[1], x[0])) if b not in listed]
        succ[a] = ordered
    return succ


def iter_paths(pp: PPGraph, rp: RPGraph, max_len: int, pair_ok=None, min_len: int = 1):
    """Depth-first enumeration of simple paths, RP hops before PP hops."""
    succ = _successors(pp, rp)
    starts = sorted(set(pp.nodes) | {t for pair in rp.edges for t in pair})

    def walk(path, hops):
        if len(path) >= min_len:
            yield ToolChain(tuple(path), tuple(hops))
        if len(path) == max_len:
            return
        for nxt, kind in succ.get(path[-1], ()):
            if nxt in path or (pair_ok is not None and not pair_ok(path[-1], nxt)):
                continue
            yield from walk(path + [nxt], hops + [kind])

    for s in starts:
        yield from walk([s], [])


def enumerate_paths(
    pp: PPGraph,
    rp: RPGraph,
    max_len: int = 3,
    max_paths: int | None = 200,
    seed: int = 0,
    pair_ok=None,
    min_len: int = 1,
) -> list[ToolChain]:
    """Enumerate validated simple paths, reservoir-sampled down to ``max_paths``.

    The sample keeps enumeration order, so RP-first preference survives.
    """
    if not 1 <= max_len <= 4:
        raise ValueError("max_len must be between 1 and 4")
    rng = random.Random(seed)
    reservoir: list[tuple[int, ToolChain]] = []
    for i, chain in enumerate(iter_paths(pp, rp, max_len, pair_ok, min_len)):
        if max_paths is None or len(reservoir) < max_paths:
            reservoir.append((i, chain))
        else:
            j = rng.randint(0, i)
            if j < max_paths:
                reservoir[j] = (i, chain)
    reservoir.sort(key=lambda x: x[0])
    return [c for _, c in reservoir]


# --------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class QueryRecord:
    query: str
    query_class: str
    gold_tools: tuple[str, ...]
    chain: tuple[str, ...]
    hops: tuple[str, ...] = ()
    query_id: str = ""
    status: str = "pending"
    flag_gate: str = ""
    flag_reason: str = ""

    def __post_init__(self):
        if self.query_class not in QUERY_CLASSES:
            raise ValueError(f"unknown query class {self.query_class!r}")
        if not self.gold_tools:
            raise ValueError("gold_tools must be non-empty")

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "query": self.query,
            "query_class": self.query_class,
            "gold_tools": list(self.gold_tools),
            "chain": list(self.chain),
            "hops": list(self.hops),
            "status": self.status,
            "flag_gate": self.flag_gate,
            "flag_reason": self.flag_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QueryRecord":
        return cls(
            query=d["query"],
            query_class=d["query_class"],
            gold_tools=tuple(d["gold_tools"]),
            chain=tuple(d.get("chain", d["gold_tools"])),
            hops=tuple(d.get("hops", ())),
            query_id=d.get("query_id", ""),
            status=d.get("status", "accepted"),
            flag_gate=d.get("flag_gate", ""),
            flag_reason=d.get("flag_reason", ""),
        )


def generate_queries(chain: ToolChain, classes, generator, catalog: Catalog) -> list[QueryRecord]:
    """One query per requested class for ``chain``; gold = the chain's tools."""
    classes = list(classes)
    for c in classes:
        if c not in QUERY_CLASSES:
            raise ValueError(f"unknown query class {c!r}")
        if (c == "single-intent") != (len(chain) == 1):
            raise IncompatibleClassError(f"class {c!r} does not fit a chain of {len(chain)} tool(s)")
    tools = [catalog[t] for t in chain.tools]
    request = GeneratorRequest(
        render_queries(tools, classes),
        "queries",
        context={"tools": [t.to_dict() for t in tools], "classes": classes},
        key_hint="->".join(chain.tools),
    )
    response = generator.generate(request)
    by_class: dict[str, str] = {}
    for item in response.value["queries"]:
        by_class.setdefault(item["query_class"], item["query"])
    out = []
    gold = tuple(sorted(set(chain.tools)))
    for c in classes:
        if c not in by_class:
            log.warning("chain %s: no %s query returned", chain.tools, c)
            continue
        out.append(QueryRecord(by_class[c].strip(), c, gold, chain.tools, chain.hops))
    return out


_THEN = re.compile(r"\bthen\b", re.I)
_ALSO = re.compile(r"\balso\b", re.I)
_IF = re.compile(r"\bif\b", re.I)
_SEQUENCING = re.compile(r"\b(then|after that|afterwards|once|followed by|next|before|first)\b", re.I)
_CONDITIONAL = re.compile(r"\b(if|only if|unless|when|whenever|in case|provided that)\b", re.I)
_PLACEHOLDER = re.compile(r"\{[^{}]*\}")


@dataclass(frozen=True)
class QueryValidation:
    accepted: bool
    gate: str = ""
    reason: str = ""


def _class_problem(record: QueryRecord) -> str:
    q, n = record.query, len(record.gold_tools)
    c = record.query_class
    if c == "single-intent":
        return "" if n == 1 else "single-intent needs exactly one gold tool"
    if n < 2:
        return f"{c} needs at least two gold tools"
    if c == "implicit-multi-step":
        for pat, word in ((_THEN, "then"), (_ALSO, "also"), (_IF, "if")):
            if pat.search(q):
                return f"implicit query uses the explicit marker {word!r}"
        return ""
    if c == "explicit-multi-step":
        return "" if _SEQUENCING.search(q) else "explicit query has no sequencing phrase"
    if c == "conditional-multi-step":
        return "" if _CONDITIONAL.search(q) else "conditional query has no condition"
    if c == "multi-intent":
        return "multi-intent query starts with a condition" if q.lower().startswith("if ") else ""
    if c == "ir-multi-intent":
        head, _, tail = q.partition("?")
        return "" if _ and head.strip() and tail.strip() else "ir-multi-intent needs a question plus an action"
    return ""


def validate_query(record: QueryRecord, pair_ok=None, tool_ids=None) -> QueryValidation:
    """Class rules, chain-level sequence check, then error detection."""
    problem = _class_problem(record)
    if problem:
        return QueryValidation(False, "class_validation", problem)
    if pair_ok is not None and len(record.chain) > 1:
        for a, b in zip(record.chain, record.chain[1:]):
            if not pair_ok(a, b):
                return QueryValidation(False, "logical_sequence", f"{a} -> {b} judged invalid")
    if not record.query.strip():
        return QueryValidation(False, "error_detection", "empty query")
    if _PLACEHOLDER.search(record.query):
        return QueryValidation(False, "error_detection", "unresolved placeholder")
    if len(set(record.chain)) != len(record.chain):
        return QueryValidation(False, "error_detection", "repeated tool in chain")
    if tool_ids is not None:
        unknown = sorted(set(record.gold_tools) - set(tool_ids))
        if unknown:
            return QueryValidation(False, "error_detection", f"unknown gold tools {unknown}")
    return QueryValidation(True)


def apply_validation(record: QueryRecord, verdict: QueryValidation) -> QueryRecord:
    if verdict.accepted:
        return replace(record, status="accepted", flag_gate="", flag_reason="")
    return replace(record, status="flagged", flag_gate=verdict.gate, flag_reason=verdict.reason)


# --------------------------------------------------------------------------
# dataset assembly


@dataclass(frozen=True)
class QueryGenConfig:
    tau: float = 0.8
    max_len: int = 3
    max_paths: int | None = 200
    seed: int = 0
    per_class: int = 25
    rp_floor: float = 0.5
    classes: tuple[str, ...] = QUERY_CLASSES


@dataclass
class GenerationStats:
    pp_edges: int = 0
    rp_edges: int = 0
    chains: int = 0
    skipped_tools: list[str] = field(default_factory=list)
    failed_chains: int = 0


def generate_dataset(catalog: Catalog, embedder, generator, config: QueryGenConfig = QueryGenConfig()):
    """Run the whole pipeline. Returns ``(records, stats)``.

    Records are numbered in generation order; flagged records are kept and
    marked. Per-class targets count accepted records only.
    """
    stats = GenerationStats()
    pp = build_pp_graph(catalog, embedder, config.tau)
    inferred = []
    for tool in catalog:
        avail = available_params(catalog, tool)
        if not avail:
            continue
        try:
            inferred += infer_outputs(tool, avail, generator, config.rp_floor)
        except (GeneratorFormatError, CacheMissError) as exc:
            log.warning("output inference skipped for %s: %s", tool.tool_id, exc)
            stats.skipped_tools.append(tool.tool_id)
    rp = build_rp_graph(catalog, inferred, config.rp_floor)
    stats.pp_edges, stats.rp_edges = len(pp.edges), len(rp.edges)

    validator = PairValidator(catalog, generator)
    wanted = [c for c in MULTI_CLASSES if c in config.classes]
    chains = enumerate_paths(pp, rp, config.max_len, config.max_paths, config.seed, validator, min_len=2) if wanted else []
    singles = [ToolChain((t,)) for t in catalog.tool_ids]
    random.Random(config.seed).shuffle(singles)
    stats.chains = len(chains)

    accepted = {c: 0 for c in config.classes}
    records: list[QueryRecord] = []
    tool_ids = set(catalog.tool_ids)

    def emit(chain, classes):
        try:
            batch = generate_queries(chain, classes, generator, catalog)
        except (GeneratorFormatError, CacheMissError) as exc:
            log.warning("query generation failed for %s: %s", chain.tools, exc)
            stats.failed_chains += 1
            return
        for rec in batch:
            rec = apply_validation(rec, validate_query(rec, validator, tool_ids))
            rec = replace(rec, query_id=f"q{len(records) + 1:04d}")
            records.append(rec)
            if rec.status == "accepted":
                accepted[rec.query_class] += 1

    if "single-intent" in config.classes:
        for chain in singles:
            if accepted["single-intent"] >= config.per_class:
                break
            emit(chain, ["single-intent"])
    for chain in chains:
        need = [c for c in wanted if accepted[c] < config.per_class]
        if not need:
            break
        emit(chain, need)
    return records, stats


def save_dataset(records: list[QueryRecord], path) -> None:
    Path(path).write_text(
        "".join(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for r in records),
        encoding="utf-8",
    )


def load_dataset(path) -> list[QueryRecord]:
    return [QueryRecord.from_dict(json.loads(line)) for line in Path(path).read_text(encoding="utf-8").split("\n") if line.strip()]

"""From tool specs to canonical triples to a populated knowledge graph."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from .catalog import Catalog, ToolSpec
from .errors import (
    CanonicalizationError,
    ExtractionFormatError,
    GeneratorFormatError,
    OntologyError,
    ProviderError,
)
from .kg import KnowledgeGraph, Triple, node_id
from .ontology import Ontology
from .prompts import render_extraction
from .providers import Generator, GeneratorRequest
from .text import SynonymTable, canonicalize_entity, canonicalize_predicate

log = logging.getLogger(__name__)

__all__ = [
    "RawTriple",
    "BuildReport",
    "canonicalize_entity",
    "canonicalize_predicate",
    "canonicalize_triples",
    "default_triples",
    "extract_triples",
    "build_graph",
]

DEFAULT_RULE = "default_rule"
LLM = "llm"


@dataclass(frozen=True)
class RawTriple:
    head: str
    relationship: str
    tail: str
    source_tool: str
    origin: str = DEFAULT_RULE

    def __post_init__(self):
        for name in ("head", "relationship", "tail"):
            if not getattr(self, name).strip():
                raise ValueError(f"RawTriple.{name} must be non-empty")


def default_triples(spec: ToolSpec, ontology: Ontology | None = None) -> list[RawTriple]:
    """Triples that follow from the structured fields alone.

    One ``has_parameter`` per parameter, then one ``has_<key>`` per metadata
    value (keys sorted, ``;``-separated values split).
    """
    out = [RawTriple(spec.title, "has_parameter", p.name, spec.tool_id) for p in spec.parameters]
    for key in sorted(spec.metadata):
        for value in spec.metadata_values(key):
            out.append(RawTriple(spec.title, f"has_{key}", value, spec.tool_id))
    return out


def _tool_predicates(ontology: Ontology) -> dict[str, str]:
    """Predicates whose subject is a tool, mapped to their object type."""
    preds = {"has_parameter": "parameter", "has_entity": "business_object"}
    for t in ontology.metadata_types:
        preds[f"has_{t}"] = t
    return preds


def extract_triples(
    spec: ToolSpec,
    ontology: Ontology,
    generator: Generator,
    table: SynonymTable | None = None,
) -> list[RawTriple]:
    """Ask the generator for open triples about one tool and filter them.

    Drops relations outside the ontology, head == tail, triples that use the
    tool title outside its structural relations, and duplicates.
    """
    request = GeneratorRequest(
        render_extraction(spec, ontology),
        "triples",
        context={"tool": spec.to_dict()},
        key_hint=spec.tool_id,
    )
    try:
        response = generator.generate(request)
    except GeneratorFormatError as exc:
        raise ExtractionFormatError(f"tool {spec.tool_id!r}: {exc}") from exc
    except ProviderError as exc:
        raise ProviderError(
            f"triple extraction for tool {spec.tool_id!r} failed: {exc}", attempts=exc.attempts, retryable=exc.retryable
        ) from exc

    title = canonicalize_entity(spec.title)
    tool_preds = _tool_predicates(ontology)
    seen = set()
    out = []
    for item in response.value["relationships"]:
        head, rel, tail = (item[k].strip() for k in ("head", "relationship", "tail"))
        if not (head and rel and tail):
            continue
        try:
            h, t = canonicalize_entity(head), canonicalize_entity(tail)
            p = canonicalize_predicate(rel, table)
        except CanonicalizationError:
            continue
        if p not in ontology.predicate_types or h == t:
            continue
        if t == title or (h == title and p not in tool_preds):
            continue
        if (h, p, t) in seen:
            continue
        seen.add((h, p, t))
        out.append(RawTriple(head, rel, tail, spec.tool_id, LLM))
    return out


@dataclass
class DiscardReport:
    counts: Counter = field(default_factory=Counter)

    def add(self, reason: str):
        self.counts[reason] += 1

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def canonicalize_triples(
    raw: list[RawTriple],
    ontology: Ontology,
    table: SynonymTable | None = None,
    tool_titles: dict[str, str] | None = None,
) -> tuple[list[Triple], DiscardReport]:
    """Canonicalize names and predicates, assign node types, drop bad triples.

    Typing: the subject of a structural ``has_*`` relation is a tool; the
    object of ``has_parameter`` is a parameter; ``has_<type>`` objects take
    that type; everything else is a ``business_object``.
    """
    table = table or SynonymTable.default()
    tool_preds = _tool_predicates(ontology)
    report = DiscardReport()
    seen = set()
    out = []
    for r in raw:
        try:
            pred = canonicalize_predicate(r.relationship, table)
            subj = canonicalize_entity(r.head)
            obj = canonicalize_entity(r.tail)
        except CanonicalizationError:
            report.add("empty_name")
            continue
        if pred not in ontology.predicate_types:
            report.add("predicate_not_in_ontology")
            continue
        if pred in tool_preds:
            s_type, o_type = "tool", tool_preds[pred]
            if tool_titles is not None and r.source_tool in tool_titles:
                if subj != canonicalize_entity(tool_titles[r.source_tool]):
                    report.add("foreign_tool_subject")
                    continue
        else:
            s_type = o_type = "business_object"
        if s_type not in ontology.entity_types or o_type not in ontology.entity_types:
            report.add("type_not_in_ontology")
            continue
        if s_type != "tool":
            subj = table.entity(subj)
        obj = table.entity(obj)
        if subj == obj:
            report.add("self_loop")
            continue
        triple = Triple(subj, s_type, pred, obj, o_type, f"{r.source_tool}/{r.origin}")
        if triple in seen:
            report.add("duplicate")
            continue
        seen.add(triple)
        out.append(triple)
    return out, report


@dataclass
class BuildReport:
    per_tool: dict[str, dict[str, int]] = field(default_factory=dict)
    discards: Counter = field(default_factory=Counter)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_tool": {k: dict(sorted(v.items())) for k, v in self.per_tool.items()},
            "discards": dict(sorted(self.discards.items())),
            "skipped": [{"tool_id": t, "reason": r} for t, r in self.skipped],
        }


def build_graph(
    catalog: Catalog,
    ontology: Ontology | None = None,
    table: SynonymTable | None = None,
    generator: Generator | None = None,
) -> tuple[KnowledgeGraph, BuildReport]:
    """Populate a frozen graph from every tool in ``catalog``.

    Default triples are always used. Generator triples are added when a
    generator is given; if it fails for a tool, that tool falls back to its
    default triples and the failure is recorded.
    """
    ontology = ontology or Ontology.default()
    table = table or SynonymTable.default()
    if generator is not None and "business_object" not in ontology.entity_types:
        raise OntologyError("open extraction needs a 'business_object' entity type")
    graph = KnowledgeGraph(ontology)
    report = BuildReport()
    titles: dict[str, str] = {}
    for tool in catalog:
        title = canonicalize_entity(tool.title)
        if title in titles:
            report.skipped.append((tool.tool_id, f"canonical title collides with tool {titles[title]!r}"))
            continue
        titles[title] = tool.tool_id
        raw = default_triples(tool, ontology)
        n_default = len(raw)
        n_llm = 0
        if generator is not None:
            try:
                extra = extract_triples(tool, ontology, generator, table)
            except (ExtractionFormatError, ProviderError) as exc:
                log.warning("open extraction skipped for %s: %s", tool.tool_id, exc)
                report.skipped.append((tool.tool_id, f"open extraction failed: {exc}"))
                extra = []
            n_llm = len(extra)
            raw += extra
        triples, discards = canonicalize_triples(raw, ontology, table, {tool.tool_id: tool.title})
        report.discards.update(discards.counts)
        tool_meta = {"tool_id": tool.tool_id, "title": tool.title, "description": tool.description}
        graph.add_node(title, "tool", tool_meta)
        tool_nid = node_id(title, "tool")
        for triple in triples:
            meta = {}
            if triple.subject_id == tool_nid:
                meta["subject"] = tool_meta
            graph.add_triple(triple, meta)
        report.per_tool[tool.tool_id] = {"default": n_default, "llm": n_llm, "kept": len(triples)}
    return graph.freeze(), report

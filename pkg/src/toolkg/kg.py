"""Typed knowledge graph with predicate edges and one-hop ego extraction.

Nodes are identified by ``(node_type, canonical name)``; the same string can
exist once as a tool and once as an entity. Edges are directed and carry a
predicate, but ego expansion walks them in both directions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    AmbiguousNodeError,
    FrozenGraphError,
    GraphFormatError,
    GraphParseError,
    NodeNotFoundError,
    OntologyError,
    SelfLoopError,
)
from .ontology import Ontology

FORMAT_VERSION = 1


def node_id(name: str, node_type: str) -> str:
    return f"{node_type}:{name}"


@dataclass(frozen=True)
class Triple:
    """A canonical (subject, predicate, object) assertion."""

    subject: str
    subject_type: str
    predicate: str
    object: str
    object_type: str
    provenance: str = ""

    @property
    def subject_id(self) -> str:
        return node_id(self.subject, self.subject_type)

    @property
    def object_id(self) -> str:
        return node_id(self.object, self.object_type)


@dataclass(frozen=True)
class Node:
    id: str
    name: str
    node_type: str
    metadata: dict[str, str] = field(default_factory=dict)

    def __hash__(self):
        return hash(self.id)


@dataclass(frozen=True)
class Edge:
    source: str
    predicate: str
    target: str
    provenance: tuple[str, ...] = ()


@dataclass(frozen=True)
class EgoGraph:
    center: str
    members: frozenset[str]
    induced_edges: tuple[Edge, ...] = ()


class KnowledgeGraph:
    def __init__(self, ontology: Ontology | None = None):
        self.ontology = ontology or Ontology.default()
        self.nodes: dict[str, Node] = {}
        self.adjacency: dict[str, set[str]] = {}
        self._edges: dict[tuple[str, str, str], set[str]] = {}
        self._by_name: dict[str, set[str]] = {}
        self._out: dict[str, dict[str, set[str]]] = {}
        self._frozen = False
        self._fingerprint: str | None = None

    # -- construction -------------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise FrozenGraphError("graph is frozen")

    def add_node(self, name: str, node_type: str, metadata: dict | None = None) -> Node:
        """Create the node or merge metadata into the existing one."""
        self._check_mutable()
        if node_type not in self.ontology.entity_types:
            raise OntologyError(f"node type {node_type!r} is not in the ontology")
        nid = node_id(name, node_type)
        merged = dict(self.nodes[nid].metadata) if nid in self.nodes else {}
        for key, value in (metadata or {}).items():
            if key in ("id", "name", "type"):
                continue
            if key in merged and merged[key] != value:
                raise ValueError(f"conflicting metadata {key!r} for node {nid!r}: {merged[key]!r} vs {value!r}")
            merged[key] = value
        merged.update(id=nid, name=name, type=node_type)
        node = Node(nid, name, node_type, dict(sorted(merged.items())))
        self.nodes[nid] = node
        self.adjacency.setdefault(nid, set())
        self._by_name.setdefault(name, set()).add(nid)
        return node

    def add_edge(self, source: str, predicate: str, target: str, provenance: str | None = None) -> None:
        self._check_mutable()
        if predicate not in self.ontology.predicate_types:
            raise OntologyError(f"predicate {predicate!r} is not in the ontology")
        if source == target:
            raise SelfLoopError(f"self-loop on {source!r} via {predicate!r}")
        for end in (source, target):
            if end not in self.nodes:
                raise NodeNotFoundError(f"edge endpoint {end!r} is not in the graph")
        prov = self._edges.setdefault((source, predicate, target), set())
        self._out.setdefault(source, {}).setdefault(target, set()).add(predicate)
        if provenance:
            prov.add(provenance)
        self.adjacency[source].add(target)
        self.adjacency[target].add(source)

    def add_triple(self, triple: Triple, node_metadata: dict | None = None) -> "KnowledgeGraph":
        """Add both endpoints and the edge. Re-adding a triple is a no-op.

        ``node_metadata`` may carry ``{"subject": {...}, "object": {...}}``.
        """
        if triple.predicate not in self.ontology.predicate_types:
            raise OntologyError(f"predicate {triple.predicate!r} is not in the ontology")
        if triple.subject_id == triple.object_id:
            raise SelfLoopError(f"triple {triple.subject!r} {triple.predicate} {triple.object!r} is a self-loop")
        node_metadata = node_metadata or {}
        s = self.add_node(triple.subject, triple.subject_type, node_metadata.get("subject"))
        o = self.add_node(triple.object, triple.object_type, node_metadata.get("object"))
        self.add_edge(s.id, triple.predicate, o.id, triple.provenance)
        return self

    def freeze(self) -> "KnowledgeGraph":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # -- queries ------------------------------------------------------------

    @property
    def edges(self) -> list[Edge]:
        return [Edge(s, p, t, tuple(sorted(prov))) for (s, p, t), prov in sorted(self._edges.items())]

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, nid):
        return nid in self.nodes

    def __eq__(self, other):
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self.ontology == other.ontology and self.nodes == other.nodes and self._edges == other._edges

    def neighbors(self, nid: str) -> set[str]:
        if nid not in self.nodes:
            raise NodeNotFoundError(f"unknown node {nid!r}")
        return self.adjacency[nid]

    def lookup_node(self, canonical_name: str, node_type: str | None = None) -> Node | None:
        """Exact-match lookup by canonical name and optional type."""
        ids = self._by_name.get(canonical_name, set())
        if node_type is not None:
            ids = {i for i in ids if self.nodes[i].node_type == node_type}
        if not ids:
            return None
        if len(ids) > 1:
            raise AmbiguousNodeError(
                f"{canonical_name!r} names several nodes {sorted(ids)}; pass node_type"
            )
        return self.nodes[next(iter(ids))]

    def nodes_named(self, canonical_name: str) -> list[Node]:
        return [self.nodes[i] for i in sorted(self._by_name.get(canonical_name, ()))]

    def tool_nodes(self) -> list[Node]:
        return sorted((n for n in self.nodes.values() if n.node_type == "tool"), key=lambda n: n.id)

    def one_hop_ego(self, nid: str) -> EgoGraph:
        return one_hop_ego(self, nid)

    def fingerprint(self) -> str:
        if self._frozen and self._fingerprint is not None:
            return self._fingerprint
        digest = hashlib.sha256(dumps_graph(self).encode("utf-8")).hexdigest()[:16]
        if self._frozen:
            self._fingerprint = digest
        return digest


def one_hop_ego(graph: KnowledgeGraph, nid: str) -> EgoGraph:
    """Center plus every node one edge away, ignoring edge direction."""
    members = frozenset({nid} | graph.neighbors(nid))
    induced = []
    for s in sorted(members):
        for t in graph.adjacency[s]:
            if t in members:
                for (es, p, et), prov in _edges_between(graph, s, t):
                    induced.append(Edge(es, p, et, tuple(sorted(prov))))
    return EgoGraph(nid, members, tuple(sorted(set(induced), key=lambda e: (e.source, e.predicate, e.target))))


def _edges_between(graph, s, t):
    # only the s -> t direction; the loop over members visits t -> s separately
    for p in graph._out.get(s, {}).get(t, ()):
        key = (s, p, t)
        yield key, graph._edges[key]


def extract_tool_nodes(ego: EgoGraph, graph: KnowledgeGraph) -> set[str]:
    return {m for m in ego.members if graph.nodes[m].node_type == "tool"}


# -- persistence ----------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def dumps_graph(graph: KnowledgeGraph) -> str:
    nodes = sorted(graph.nodes.values(), key=lambda n: (n.node_type, n.name))
    edges = graph.edges
    lines = [
        _dump(
            {
                "kind": "header",
                "format_version": FORMAT_VERSION,
                "ontology": graph.ontology.to_dict(),
                "node_count": len(nodes),
                "edge_count": len(edges),
            }
        )
    ]
    lines += [_dump({"kind": "node", "id": n.id, "name": n.name, "type": n.node_type, "metadata": n.metadata}) for n in nodes]
    lines += [
        _dump({"kind": "edge", "source": e.source, "predicate": e.predicate, "target": e.target, "provenance": list(e.provenance)})
        for e in edges
    ]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> KnowledgeGraph:
    lines = text.split("\n")
    if not lines or not lines[0].strip():
        raise GraphParseError("snapshot is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"bad snapshot header: {exc.msg}") from None
    if not isinstance(header, dict) or header.get("kind") != "header":
        raise GraphParseError("first snapshot record is not a header")
    if header.get("format_version") != FORMAT_VERSION:
        raise GraphFormatError(
            f"snapshot format_version {header.get('format_version')!r} is incompatible with {FORMAT_VERSION}"
        )
    if not text.endswith("\n"):
        raise GraphParseError("snapshot is truncated (missing final newline)")
    graph = KnowledgeGraph(Ontology.from_dict(header["ontology"]))
    n_nodes = n_edges = 0
    try:
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            rec = json.loads(line)
            if rec["kind"] == "node":
                node = graph.add_node(rec["name"], rec["type"], rec["metadata"])
                if node.id != rec["id"]:
                    raise GraphParseError(f"line {lineno}: node id {rec['id']!r} does not match its name/type")
                n_nodes += 1
            elif rec["kind"] == "edge":
                graph.add_edge(rec["source"], rec["predicate"], rec["target"])
                graph._edges[(rec["source"], rec["predicate"], rec["target"])].update(rec["provenance"])
                n_edges += 1
            else:
                raise GraphParseError(f"line {lineno}: unknown record kind {rec['kind']!r}")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise GraphParseError(f"malformed snapshot record: {exc}") from None
    if (n_nodes, n_edges) != (header.get("node_count"), header.get("edge_count")):
        raise GraphParseError(
            f"snapshot is truncated: header promises {header.get('node_count')} nodes/"
            f"{header.get('edge_count')} edges, found {n_nodes}/{n_edges}"
        )
    return graph.freeze()


def save_graph(graph: KnowledgeGraph, path) -> None:
    Path(path).write_text(dumps_graph(graph), encoding="utf-8")


def load_graph(path) -> KnowledgeGraph:
    return loads_graph(Path(path).read_text(encoding="utf-8"))

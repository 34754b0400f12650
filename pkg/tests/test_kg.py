import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bfs_within, random_graph
from toolkg.errors import (
    AmbiguousNodeError,
    FrozenGraphError,
    GraphFormatError,
    GraphParseError,
    NodeNotFoundError,
    OntologyError,
    SelfLoopError,
)
from toolkg.kg import KnowledgeGraph, Triple, dumps_graph, extract_tool_nodes, load_graph, loads_graph, one_hop_ego, save_graph
from toolkg.ontology import Ontology


def small():
    g = KnowledgeGraph()
    g.add_triple(Triple("read order", "tool", "has_parameter", "order id", "parameter", "t1"))
    g.add_triple(Triple("update order", "tool", "has_parameter", "order id", "parameter", "t2"))
    g.add_triple(Triple("update order", "tool", "has_business_object", "order", "business_object", "t2"))
    return g


def test_add_triple_creates_typed_nodes():
    g = small()
    assert set(g.nodes) == {"tool:read order", "tool:update order", "parameter:order id", "business_object:order"}
    assert g.neighbors("parameter:order id") == {"tool:read order", "tool:update order"}


def test_add_triple_twice_merges_provenance():
    g = small()
    g.add_triple(Triple("read order", "tool", "has_parameter", "order id", "parameter", "again"))
    (edge,) = [e for e in g.edges if e.source == "tool:read order"]
    assert edge.provenance == ("again", "t1")
    assert len(g.edges) == 3


def test_ontology_and_self_loop_errors():
    g = KnowledgeGraph()
    with pytest.raises(OntologyError):
        g.add_triple(Triple("a", "tool", "likes", "b", "parameter"))
    with pytest.raises(OntologyError):
        g.add_node("x", "planet")
    with pytest.raises(SelfLoopError):
        g.add_triple(Triple("a", "tool", "related_to", "a", "tool"))
    g.add_node("a", "tool")
    with pytest.raises(NodeNotFoundError):
        g.add_edge("tool:a", "related_to", "tool:zzz")


def test_conflicting_metadata_rejected():
    g = KnowledgeGraph()
    g.add_node("a", "tool", {"title": "A"})
    g.add_node("a", "tool", {"title": "A", "extra": 1})
    with pytest.raises(ValueError):
        g.add_node("a", "tool", {"title": "B"})


def test_frozen_graph_rejects_mutation():
    g = small().freeze()
    with pytest.raises(FrozenGraphError):
        g.add_node("b", "tool")


def test_lookup():
    g = small()
    g.add_node("order", "capability")
    assert g.lookup_node("order id").id == "parameter:order id"
    assert g.lookup_node("missing") is None
    with pytest.raises(AmbiguousNodeError):
        g.lookup_node("order")
    assert g.lookup_node("order", "capability").node_type == "capability"


def test_one_hop_ego_is_undirected_and_induced():
    g = small()
    ego = one_hop_ego(g, "parameter:order id")
    assert ego.members == {"parameter:order id", "tool:read order", "tool:update order"}
    assert len(ego.induced_edges) == 2
    assert extract_tool_nodes(ego, g) == {"tool:read order", "tool:update order"}
    with pytest.raises(NodeNotFoundError):
        one_hop_ego(g, "tool:nope")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_ego_matches_bfs(seed):
    rng = random.Random(seed)
    g, plain = random_graph(rng, 40)
    for nid in rng.sample(sorted(g.nodes), min(5, len(g.nodes))):
        ego = one_hop_ego(g, nid)
        assert set(ego.members) == bfs_within(plain, nid, 1)
        for e in ego.induced_edges:
            assert e.source in ego.members and e.target in ego.members


def test_snapshot_roundtrip_and_fingerprint(tmp_path, toy_graph):
    path = tmp_path / "g.jsonl"
    save_graph(toy_graph, path)
    loaded = load_graph(path)
    assert loaded == toy_graph
    assert loaded.frozen
    assert loaded.fingerprint() == toy_graph.fingerprint()
    assert dumps_graph(loaded) == path.read_text()


def test_snapshot_order_independent():
    a, b = KnowledgeGraph(), KnowledgeGraph()
    triples = [
        Triple("x", "tool", "has_parameter", "p", "parameter", "1"),
        Triple("y", "tool", "has_parameter", "p", "parameter", "2"),
        Triple("y", "tool", "has_capability", "c", "capability", "2"),
    ]
    for t in triples:
        a.add_triple(t)
    for t in reversed(triples):
        b.add_triple(t)
    assert dumps_graph(a) == dumps_graph(b)


def test_snapshot_errors(toy_graph):
    text = dumps_graph(toy_graph)
    with pytest.raises(GraphParseError):
        loads_graph(text[:-1])
    with pytest.raises(GraphParseError):
        loads_graph("\n".join(text.split("\n")[:5]) + "\n")
    with pytest.raises(GraphFormatError):
        loads_graph(text.replace('"format_version":1', '"format_version":99', 1))
    with pytest.raises(GraphParseError):
        loads_graph("")
    with pytest.raises(GraphParseError):
        loads_graph(text.split("\n")[0] + "\n{broken\n")


def test_custom_ontology_roundtrip():
    onto = Ontology.default().extended(entity_types=["region"], predicate_types=["located_in"])
    g = KnowledgeGraph(onto)
    g.add_triple(Triple("warehouse a", "business_object", "located_in", "north", "region"))
    assert loads_graph(dumps_graph(g)).ontology == onto

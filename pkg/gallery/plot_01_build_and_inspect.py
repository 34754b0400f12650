"""
Building a tool graph and looking around it
===========================================

Load the bundled purchase-order catalog, turn it into a knowledge graph and
print the one-hop neighbourhood of a business object.
"""

from toolkg import build_graph, load_toy_catalog, one_hop_ego

catalog = load_toy_catalog()
print(f"{len(catalog)} tools, e.g. {catalog.tool_ids[:3]}")

# %%
# Structured fields alone give tool -> parameter and tool -> metadata edges.
graph, report = build_graph(catalog)
print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges, fingerprint {graph.fingerprint()}")

types = {}
for node in graph.nodes.values():
    types[node.node_type] = types.get(node.node_type, 0) + 1
print(types)

# %%
# Every tool attached to "purchase order item" sits one hop away from it.
ego = one_hop_ego(graph, "business_object:purchase order item")
for member in sorted(ego.members):
    print("  ", member)

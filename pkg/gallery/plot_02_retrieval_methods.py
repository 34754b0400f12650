"""
Four ways to retrieve tools for one request
===========================================

Compare lexical, semantic, hybrid and ego-graph retrieval on a single query
over the toy catalog, using the deterministic local providers.
"""

from toolkg import LocalEmbedder, LocalReranker, Retriever, build_graph, load_toy_catalog

graph, _ = build_graph(load_toy_catalog())
embedder = LocalEmbedder()
retriever = Retriever(graph, embedder, LocalReranker(embedder))

query = "Show me the details of all purchase order items with 'pending' status"
results = retriever.run(query)

# %%
# The ego-graph method starts from entry nodes: the semantic top hits plus
# any node whose full name appears verbatim in the query.
eeg = results["eeg"]
print("textual entry points:", eeg.diagnostics["entry_textual"])
print("candidates after expansion:", eeg.diagnostics["candidate_count"])

# %%
for method, res in results.items():
    print(f"{method:9s}", res.tool_ids[:5])

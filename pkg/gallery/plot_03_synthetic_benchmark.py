"""
A small benchmark from tool dependencies
========================================

Generate class-labelled queries from parameter similarity and inferred
output-to-input links, run every retriever and print the recall table.
"""

from collections import Counter

from toolkg.benchmark import run_benchmark

result = run_benchmark(seed=0, per_class=10)
print(f"{len(result.accepted)} accepted queries in {result.seconds:.1f}s")
print(Counter(r.query_class for r in result.accepted))

# %%
# A few generated queries with their gold tool sets.
for rec in result.accepted[::12][:5]:
    print(f"[{rec.query_class}] {rec.query}\n    gold: {list(rec.gold_tools)}")

# %%
print(result.report.to_markdown())

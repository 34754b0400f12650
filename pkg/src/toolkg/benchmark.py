"""A seeded synthetic catalog and an end-to-end benchmark run over it.

Tools are (action, business object) pairs. Tools on the same object share
the object's identifier parameter and ``business_object`` metadata, and some
objects reference a parent object's identifier too. Generated query chains
therefore connect tools through shared entity and parameter nodes by
construction.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from .catalog import Catalog, ParameterSpec, ToolSpec
from .evaluation import EvalCase, EvalReport, build_report
from .extraction import build_graph
from .providers import LocalEmbedder, LocalReranker
from .querygen import GenerationStats, QueryGenConfig, QueryRecord, generate_dataset
from .retrieval import METHODS, RetrievalConfig, Retriever
from .templating import TemplateGenerator

OBJECTS = (
    ("invoice", "billing document sent to a customer", "finance"),
    ("payment", "money transfer settling an open item", "finance"),
    ("expense report", "employee claim for business costs", "finance"),
    ("budget", "planned spending for a cost center", "finance"),
    ("sales order", "customer request to deliver goods", "sales"),
    ("quotation", "price offer made to a prospect", "sales"),
    ("customer", "party that buys goods or services", "sales"),
    ("contract", "binding agreement with a partner", "sales"),
    ("purchase order", "request sent to a supplier to buy goods", "procurement"),
    ("supplier", "vendor that provides goods", "procurement"),
    ("requisition", "internal request for materials", "procurement"),
    ("shipment", "goods in transit to a destination", "logistics"),
    ("delivery", "handover of goods to a recipient", "logistics"),
    ("warehouse", "storage location for stock", "logistics"),
    ("material", "product or raw good kept in stock", "logistics"),
    ("employee", "person working for the company", "human resources"),
    ("timesheet", "record of hours worked", "human resources"),
    ("leave request", "application for time off", "human resources"),
    ("asset", "piece of equipment owned by the company", "operations"),
    ("maintenance ticket", "repair job for an asset", "operations"),
)

# object -> parent whose identifier it also takes
PARENTS = {
    "invoice": "customer",
    "payment": "invoice",
    "sales order": "customer",
    "quotation": "customer",
    "contract": "customer",
    "purchase order": "supplier",
    "requisition": "material",
    "shipment": "sales order",
    "delivery": "shipment",
    "timesheet": "employee",
    "leave request": "employee",
    "expense report": "employee",
    "maintenance ticket": "asset",
}

ACTIONS = (
    ("read", "Returns the details of one {obj}, a {gloss}."),
    ("update", "Changes fields of an existing {obj} record."),
    ("approve", "Approves a pending {obj} so processing can continue."),
    ("cancel", "Cancels an open {obj} and records the reason."),
    ("list", "Lists every {obj} that matches the given filters."),
)

DEPARTMENTS = {
    "finance": ("accounting", "controlling"),
    "sales": ("sales", "customer service"),
    "procurement": ("purchasing",),
    "logistics": ("warehouse", "transport"),
    "human resources": ("personnel",),
    "operations": ("facilities",),
}


def _id_param(obj: str) -> ParameterSpec:
    return ParameterSpec(f"{obj.replace(' ', '_')}_id", f"Identifier of the {obj}")


def synthetic_catalog(seed: int = 0, n_objects: int = len(OBJECTS)) -> Catalog:
    """``n_objects`` x ``len(ACTIONS)`` tools with seeded metadata choices."""
    rng = random.Random(seed)
    tools = []
    for obj, gloss, lob in OBJECTS[:n_objects]:
        dept = rng.choice(DEPARTMENTS[lob])
        for verb, desc in ACTIONS:
            params = [_id_param(obj)]
            parent = PARENTS.get(obj)
            if parent and parent in {o for o, _, _ in OBJECTS[:n_objects]} and rng.random() < 0.6:
                params.append(_id_param(parent))
            if verb == "list":
                params = params[1:] + [ParameterSpec("status", "Status value to filter on")]
            elif verb == "update":
                params.append(ParameterSpec("changes", f"Field values to change on the {obj}", "object"))
            tools.append(
                ToolSpec(
                    tool_id=f"{verb}_{obj.replace(' ', '_')}",
                    title=f"{verb.capitalize()} {obj}",
                    description=desc.format(obj=obj, gloss=gloss),
                    parameters=tuple(params),
                    metadata={"business_object": obj, "line_of_business": lob, "department": dept},
                )
            )
    return Catalog(tuple(tools))


@dataclass
class BenchmarkResult:
    catalog: Catalog
    records: list[QueryRecord]
    stats: GenerationStats
    report: EvalReport
    cases: list[EvalCase]
    seconds: float

    @property
    def accepted(self) -> list[QueryRecord]:
        return [r for r in self.records if r.status == "accepted"]


def run_benchmark(seed: int = 0, per_class: int = 25, dim: int = 256) -> BenchmarkResult:
    """Catalog, graph, queries, all four retrievers and the report, all local."""
    start = time.perf_counter()
    catalog = synthetic_catalog(seed)
    embedder = LocalEmbedder(dim=dim)
    generator = TemplateGenerator()
    graph, _ = build_graph(catalog)
    records, stats = generate_dataset(catalog, embedder, generator, QueryGenConfig(seed=seed, per_class=per_class))
    retriever = Retriever(graph, embedder, LocalReranker(embedder), config=RetrievalConfig())
    cases = []
    for rec in records:
        if rec.status != "accepted":
            continue
        results = retriever.run(rec.query, METHODS)
        rankings = {m: r.tool_ids for m, r in results.items()}
        cases.append(EvalCase(rec.query_id, rec.query_class, frozenset(rec.gold_tools), rankings))
    report = build_report(cases, metadata={"seed": seed, "graph": graph.fingerprint(), "queries": len(cases)})
    return BenchmarkResult(catalog, records, stats, report, cases, time.perf_counter() - start)

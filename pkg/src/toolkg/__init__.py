"""Tool retrieval over a knowledge graph built from tool documentation.

Build a graph from a catalog, retrieve tools with the ego-graph ensemble or
one of three baselines, generate a synthetic query benchmark and score runs
with CompleteRecall@k.
"""

from .catalog import Catalog, ParameterSpec, ToolSpec, load_catalog, load_toy_catalog
from .evaluation import EvalCase, EvalReport, build_report, complete_recall, recall_at_k
from .extraction import build_graph, canonicalize_entity, canonicalize_predicate
from .kg import KnowledgeGraph, load_graph, one_hop_ego, save_graph
from .ontology import Ontology
from .providers import LocalEmbedder, LocalReranker, TranscriptCache, TranscriptGenerator
from .retrieval import RetrievalConfig, Retriever
from .templating import TemplateGenerator

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "ParameterSpec",
    "ToolSpec",
    "load_catalog",
    "load_toy_catalog",
    "EvalCase",
    "EvalReport",
    "build_report",
    "complete_recall",
    "recall_at_k",
    "build_graph",
    "canonicalize_entity",
    "canonicalize_predicate",
    "KnowledgeGraph",
    "load_graph",
    "one_hop_ego",
    "save_graph",
    "Ontology",
    "LocalEmbedder",
    "LocalReranker",
    "TranscriptCache",
    "TranscriptGenerator",
    "RetrievalConfig",
    "Retriever",
    "TemplateGenerator",
]

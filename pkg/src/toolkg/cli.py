"""Command-line front end: ``toolkg {build-graph,gen-queries,retrieve,eval,inspect}``.

Every flag can also be given in a JSON file passed with ``--config``; values
from the file override flags. Provider credentials come only from the
environment (see :func:`toolkg.providers.remote_providers_from_env`).

Exit codes: 0 success, 1 pipeline error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import errors
from .catalog import load_catalog, toy_catalog_path
from .evaluation import build_report, cases_from_records
from .extraction import build_graph
from .index import EmbeddingIndex, IndexConfig
from .kg import load_graph, one_hop_ego, save_graph
from .ontology import Ontology
from .providers import (
    LocalEmbedder,
    LocalReranker,
    RecordingGenerator,
    TranscriptCache,
    TranscriptGenerator,
    remote_providers_from_env,
)
from .querygen import QueryGenConfig, generate_dataset, load_dataset, save_dataset
from .retrieval import METHODS, RetrievalConfig, Retriever, load_run_log, run_record, save_run_log
from .templating import TemplateGenerator
from .text import SynonymTable, canonicalize_entity

log = logging.getLogger("toolkg")

# error class -> module tag printed with pipeline failures
_TAGS = (
    (errors.CatalogError, "catalog"),
    (errors.CanonicalizationError, "extraction"),
    (errors.ExtractionFormatError, "extraction"),
    (errors.OntologyError, "kg_core"),
    (errors.GraphFormatError, "kg_core"),
    (errors.GraphParseError, "kg_core"),
    (errors.NodeNotFoundError, "kg_core"),
    (errors.AmbiguousNodeError, "kg_core"),
    (errors.ProviderError, "providers"),
    (errors.ConfigurationError, "retrieval"),
    (errors.IncompatibleClassError, "querygen"),
    (errors.ReportError, "eval"),
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file whose keys override flags")
    p.add_argument("--provider", choices=("local", "remote"), default="local")
    p.add_argument("--dim", type=int, default=256, help="local embedding dimension")
    p.add_argument("--embed-seed", type=int, default=42, help="local embedding hash seed")
    p.add_argument("-v", "--verbose", action="store_true")


def _generator_flags(p: argparse.ArgumentParser):
    p.add_argument("--generator", choices=("none", "template", "transcript", "remote"), default="template")
    p.add_argument("--transcripts", help="transcript cache (JSONL) to replay")
    p.add_argument("--strict", action="store_true", help="fail on transcript misses instead of falling back")
    p.add_argument("--record", help="write every generator response to this transcript file")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toolkg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-graph", help="catalog -> graph snapshot + build report")
    _common(p)
    _generator_flags(p)
    p.set_defaults(generator="none")
    p.add_argument("--catalog", default=None, help="catalog JSONL (default: bundled toy catalog)")
    p.add_argument("--out", required=True, help="snapshot path")
    p.add_argument("--report", help="build report JSON path")
    p.add_argument("--ontology", help="ontology JSON file")
    p.add_argument("--synonyms", help="synonym table JSON file (extends the defaults)")

    p = sub.add_parser("gen-queries", help="catalog -> query dataset")
    _common(p)
    _generator_flags(p)
    p.add_argument("--catalog", default=None)
    p.add_argument("--out", required=True, help="dataset JSONL path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=0.8)
    p.add_argument("--max-len", type=int, default=3)
    p.add_argument("--max-paths", type=int, default=200)
    p.add_argument("--per-class", type=int, default=25)
    p.add_argument("--rp-floor", type=float, default=0.5)

    p = sub.add_parser("retrieve", help="snapshot + queries -> run log")
    _common(p)
    p.add_argument("--graph", required=True, help="graph snapshot")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--queries", help="dataset JSONL (uses query_id and query)")
    src.add_argument("--query", help="a single query string")
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p.add_argument("--out", required=True, help="run log JSONL path")
    p.add_argument("--index", help="precomputed node embedding index; must match the snapshot")
    p.add_argument("--save-index", help="write the node embedding index here")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--k-entry", type=int, default=10)
    p.add_argument("--min-cosine", type=float, default=None)
    p.add_argument("--tokenizer", choices=("whitespace", "word_boundary", "lemma"), default="word_boundary")
    p.add_argument("--field-mode", choices=("description_only", "description_plus_title"), default="description_plus_title")
    p.add_argument("--k1", type=float, default=1.5)
    p.add_argument("--b", type=float, default=0.75)

    p = sub.add_parser("eval", help="dataset + run log -> report.csv, report.md")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--run-log", required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("inspect", help="print the one-hop ego graph of a node")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("name", help="node name (canonicalized before lookup)")
    p.add_argument("--type", dest="node_type", default=None)
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    return parser


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise errors.ConfigurationError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise errors.ConfigurationError("config file must hold a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        setattr(args, dest, value)
    return args


def _embedder(args):
    if args.provider == "remote":
        emb, _, _ = remote_providers_from_env()
        if emb is None:
            raise errors.ConfigurationError("remote provider mode needs PROVIDER_EMBED_URL")
        return emb
    return LocalEmbedder(args.dim, args.embed_seed)


def _reranker(args, embedder):
    if args.provider == "remote":
        _, rr, _ = remote_providers_from_env()
        if rr is None:
            raise errors.ConfigurationError("remote provider mode needs PROVIDER_RERANK_URL")
        return rr
    return LocalReranker(embedder)


def _generator(args):
    kind = args.generator
    if kind == "none":
        gen = None
    elif kind == "template":
        gen = TemplateGenerator()
    elif kind == "transcript":
        if not args.transcripts:
            raise UsageError("--generator transcript needs --transcripts")
        fallback = None if args.strict else TemplateGenerator()
        gen = TranscriptGenerator(TranscriptCache(args.transcripts), strict=args.strict, fallback=fallback)
    else:
        _, _, gen = remote_providers_from_env()
        if gen is None:
            raise errors.ConfigurationError("--generator remote needs PROVIDER_GEN_URL")
    cache = None
    if args.record and gen is not None:
        cache = TranscriptCache(args.record)
        gen = RecordingGenerator(gen, cache)
    return gen, cache


def _catalog(args, ontology=None):
    return load_catalog(args.catalog or toy_catalog_path(), ontology)


def cmd_build_graph(args) -> int:
    ontology = Ontology.default()
    if args.ontology:
        ontology = Ontology.from_dict(json.loads(Path(args.ontology).read_text(encoding="utf-8")))
    table = SynonymTable.from_file(args.synonyms) if args.synonyms else SynonymTable.default()
    catalog = _catalog(args, ontology)
    generator, cache = _generator(args)
    graph, report = build_graph(catalog, ontology, table, generator)
    save_graph(graph, args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if cache is not None:
        cache.save()
    print(f"graph {graph.fingerprint()}: {len(graph.nodes)} nodes, {len(graph.edges)} edges -> {args.out}")
    return 0


def cmd_gen_queries(args) -> int:
    catalog = _catalog(args)
    generator, cache = _generator(args)
    if generator is None:
        raise UsageError("gen-queries needs a generator")
    config = QueryGenConfig(
        tau=args.tau,
        max_len=args.max_len,
        max_paths=args.max_paths,
        seed=args.seed,
        per_class=args.per_class,
        rp_floor=args.rp_floor,
    )
    records, stats = generate_dataset(catalog, _embedder(args), generator, config)
    save_dataset(records, args.out)
    if cache is not None:
        cache.save()
    accepted = sum(r.status == "accepted" for r in records)
    print(
        f"{len(records)} queries ({accepted} accepted) from {stats.chains} chains; "
        f"P-P edges {stats.pp_edges}, R-P edges {stats.rp_edges} -> {args.out}"
    )
    return 0


def cmd_retrieve(args) -> int:
    graph = load_graph(args.graph)
    embedder = _embedder(args)
    node_index = None
    if args.index:
        node_index = EmbeddingIndex.load(args.index)
        if node_index.source_fingerprint != graph.fingerprint():
            raise errors.ConfigurationError(
                f"index {args.index} was built for graph {node_index.source_fingerprint}, "
                f"snapshot is {graph.fingerprint()}"
            )
        if node_index.provider_fingerprint != embedder.fingerprint:
            raise errors.ConfigurationError(
                f"index {args.index} was built with {node_index.provider_fingerprint}, not {embedder.fingerprint}"
            )
    index_config = IndexConfig(args.tokenizer, args.field_mode, args.k1, args.b, dim=args.dim, seed=args.embed_seed)
    config = RetrievalConfig(k_final=args.k, k_entry_semantic=args.k_entry, min_cosine=args.min_cosine)
    retriever = Retriever(graph, embedder, _reranker(args, embedder), index_config, config, node_index)
    if args.save_index:
        retriever.node_index.save(args.save_index)
    if args.query is not None:
        queries = [("q0001", args.query)]
    else:
        queries = [(r.query_id, r.query) for r in load_dataset(args.queries) if r.status == "accepted"]
    methods = METHODS if args.method == "all" else (args.method,)
    records = []
    for qid, text in queries:
        results = retriever.run(text, methods)
        records += [run_record(qid, results[m], args.k) for m in methods]
    save_run_log(records, args.out)
    print(f"{len(queries)} queries x {len(methods)} methods -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    dataset = [r.to_dict() for r in load_dataset(args.dataset)]
    run_log = load_run_log(args.run_log)
    cases, summary = cases_from_records(dataset, run_log)
    if not cases:
        raise errors.ReportError("no accepted query has a ranking in the run log")
    methods = tuple(m for m in METHODS if any(m in c.rankings for c in cases))
    report = build_report(cases, methods, metadata={"cases": len(cases), **summary})
    csv_path, md_path = report.write(args.out_dir)
    print(f"{len(cases)} cases -> {csv_path}, {md_path}")
    return 0


def cmd_inspect(args) -> int:
    graph = load_graph(args.graph)
    node = graph.lookup_node(canonicalize_entity(args.name), args.node_type)
    if node is None:
        raise errors.NodeNotFoundError(f"no node named {canonicalize_entity(args.name)!r}")
    ego = one_hop_ego(graph, node.id)
    members = sorted(ego.members - {node.id})
    tools = sorted(m for m in members if graph.nodes[m].node_type == "tool")
    if args.json:
        dump = {
            "center": node.id,
            "neighbors": members,
            "tools": [{"id": t, "tool_id": graph.nodes[t].metadata.get("tool_id", t)} for t in tools],
            "edges": [[e.source, e.predicate, e.target] for e in ego.induced_edges],
        }
        print(json.dumps(dump, indent=2, sort_keys=True))
        return 0
    print(f"{node.id}  ({len(members)} neighbors)")
    print("tools:")
    for t in tools:
        print(f"  {graph.nodes[t].metadata.get('tool_id', t)}  {graph.nodes[t].name}")
    print("edges:")
    for e in ego.induced_edges:
        print(f"  {e.source} -[{e.predicate}]-> {e.target}")
    return 0


COMMANDS = {
    "build-graph": cmd_build_graph,
    "gen-queries": cmd_gen_queries,
    "retrieve": cmd_retrieve,
    "eval": cmd_eval,
    "inspect": cmd_inspect,
}


def _tag(exc: Exception, command: str) -> str:
    for cls, tag in _TAGS:
        if isinstance(exc, cls):
            return tag
    return command


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except errors.ToolKGError as exc:
        print(f"error [cli]: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except errors.ToolKGError as exc:
        print(f"error [{_tag(exc, args.command)}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    sys.exit(run(argv))

import json

import pytest

from toolkg.catalog import Catalog, ParameterSpec, ToolSpec, load_toy_catalog
from toolkg.extraction import build_graph
from toolkg.providers import GeneratorResponse, LocalEmbedder, LocalReranker, parse_generator_output


class ScriptedGenerator:
    """Answers each schema with a fixed JSON value; records every request."""

    def __init__(self, answers=None, error=None):
        self.answers = answers or {}
        self.error = error
        self.requests = []

    def generate(self, request) -> GeneratorResponse:
        self.requests.append(request)
        if self.error is not None:
            raise self.error
        value = self.answers[request.schema]
        if callable(value):
            value = value(request)
        text = value if isinstance(value, str) else json.dumps(value)
        return parse_generator_output(text, request.schema)


@pytest.fixture
def scripted():
    return ScriptedGenerator


@pytest.fixture(scope="session")
def toy_catalog():
    return load_toy_catalog()


@pytest.fixture(scope="session")
def toy_graph(toy_catalog):
    graph, _ = build_graph(toy_catalog)
    return graph


@pytest.fixture(scope="session")
def embedder():
    return LocalEmbedder()


@pytest.fixture(scope="session")
def reranker(embedder):
    return LocalReranker(embedder)


def make_tool(tool_id, title, params=(), desc="", **metadata):
    return ToolSpec(tool_id, title, desc, tuple(ParameterSpec(*p) if isinstance(p, tuple) else ParameterSpec(p) for p in params), metadata)


@pytest.fixture
def tool():
    return make_tool


@pytest.fixture
def small_catalog():
    return Catalog(
        (
            make_tool("a", "Read expense report", [("report_id", "Identifier of the report")], "Returns an expense report.", business_object="expense report"),
            make_tool("b", "Update transaction amount", [("report_id", "Identifier of the report"), ("amount", "New amount")], "Changes the amount.", business_object="expense report"),
            make_tool("c", "List suppliers", [("country", "Country code")], "Lists suppliers by country.", business_object="supplier"),
        )
    )


# -- acceptance reporting ----------------------------------------------------

CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line per criterion: call with (label, detail)."""
    state = {}

    def note(label, detail=""):
        state["label"], state["detail"] = label, detail

    yield note
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    CRITERIA[state.get("label", request.node.name)] = (passed, state.get("detail", ""))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, (ok, detail) in sorted(CRITERIA.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())

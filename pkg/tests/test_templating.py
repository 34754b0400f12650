import re

from toolkg.benchmark import synthetic_catalog
from toolkg.providers import QUERY_CLASSES, GeneratorRequest
from toolkg.querygen import QueryRecord, ToolChain, available_params, generate_queries, infer_outputs, validate_query
from toolkg.templating import TemplateGenerator


def test_outputs_use_title_objects():
    cat = synthetic_catalog(0, n_objects=6)
    tool = cat["read_invoice"]
    out = infer_outputs(tool, available_params(cat, tool), TemplateGenerator())
    assert all(o.confidence >= 0.5 for o in out) and len(out) <= 3


def test_every_class_passes_its_own_rules():
    cat = synthetic_catalog(0, n_objects=6)
    gen = TemplateGenerator()
    single = generate_queries(ToolChain(("read_invoice",)), ["single-intent"], gen, cat)
    multi = generate_queries(ToolChain(("read_invoice", "approve_invoice"), ("pp",)), QUERY_CLASSES[1:], gen, cat)
    for rec in single + multi:
        assert validate_query(rec).accepted, rec
        assert not re.search(r"[{}]", rec.query)
    assert {r.query_class for r in multi} == set(QUERY_CLASSES[1:])


def test_deterministic():
    cat = synthetic_catalog(0, n_objects=3)
    ctx = {"tools": [t.to_dict() for t in list(cat)[:2]], "classes": list(QUERY_CLASSES[1:])}
    req = GeneratorRequest("p", "queries", context=ctx)
    assert TemplateGenerator().generate(req).raw_text == TemplateGenerator().generate(req).raw_text

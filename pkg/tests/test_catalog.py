import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toolkg.catalog import (
    Catalog,
    ParameterSpec,
    ToolSpec,
    dump_catalog,
    load_catalog,
    parse_catalog,
    save_catalog,
    validate_tool,
)
from toolkg.errors import CatalogParseError, CatalogValidationError, DuplicateToolError


def line(**rec):
    base = {"tool_id": "t1", "title": "Read order", "description": "d", "parameters": [], "metadata": {}}
    base.update(rec)
    return json.dumps(base)


def test_parse_minimal_and_blank_lines():
    cat = parse_catalog(line() + "\n\n" + line(tool_id="t2", title="Other") + "\n")
    assert cat.tool_ids == ["t1", "t2"]
    assert cat["t2"].title == "Other"


def test_missing_field_names_record_and_field():
    bad = json.dumps({"tool_id": "t9", "description": "x"})
    with pytest.raises(CatalogParseError, match=r"record 1: missing field 'title'"):
        parse_catalog(line() + "\n" + bad)


def test_wrong_type_and_bad_json():
    with pytest.raises(CatalogParseError, match="must be str"):
        parse_catalog(line(title=3))
    with pytest.raises(CatalogParseError, match="invalid JSON"):
        parse_catalog("{not json")


def test_duplicate_ids_name_both_records():
    with pytest.raises(DuplicateToolError, match="records 0 and 1"):
        parse_catalog(line() + "\n" + line())


def test_validation_is_atomic():
    text = line() + "\n" + line(tool_id="t2", metadata={"colour": "red"})
    with pytest.raises(CatalogValidationError, match="colour"):
        parse_catalog(text)


def test_validate_tool_reports_parameter_problems():
    spec = ToolSpec("t", "T", "", (ParameterSpec("a"), ParameterSpec("a"), ParameterSpec(" ")))
    fields = [i.field for i in validate_tool(spec)]
    assert fields == ["parameters[1].name", "parameters[2].name"]


def test_metadata_values_split():
    spec = ToolSpec("t", "T", metadata={"business_object": "order; order item ;"})
    assert spec.metadata_values("business_object") == ["order", "order item"]


def test_toy_catalog_loads(toy_catalog):
    assert len(toy_catalog) >= 15
    assert {"po_item_read", "po_item_query"} <= set(toy_catalog.tool_ids)


names = st.text(alphabet="abcdefgh_ ", min_size=1, max_size=12).filter(lambda s: s.strip())


@st.composite
def catalogs(draw):
    n = draw(st.integers(0, 5))
    tools = []
    for i in range(n):
        pnames = draw(st.lists(names, max_size=3, unique=True))
        tools.append(
            ToolSpec(
                f"t{i}",
                draw(names),
                draw(st.text(max_size=20)),
                tuple(ParameterSpec(p, draw(st.text(max_size=10))) for p in pnames),
                draw(st.dictionaries(st.sampled_from(["department", "capability"]), names, max_size=2)),
            )
        )
    return Catalog(tuple(tools))


@settings(max_examples=100, deadline=None)
@given(catalogs())
def test_roundtrip(cat):
    assert parse_catalog(dump_catalog(cat)) == cat


def test_save_load(tmp_path, small_catalog):
    path = tmp_path / "c.jsonl"
    save_catalog(small_catalog, path)
    loaded = load_catalog(path)
    assert loaded == small_catalog
    assert loaded.source_path == str(path)

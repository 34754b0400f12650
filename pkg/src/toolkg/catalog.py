"""Tool catalog ingestion and validation.

A catalog file holds one JSON object per line::

    {"tool_id": "t1", "title": "...", "description": "...",
     "parameters": [{"name": "...", "description": "...", "value_type": "..."}],
     "metadata": {"department": "operations"}}

Blank lines are ignored. Loading is atomic: any bad record rejects the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CatalogParseError, CatalogValidationError, DuplicateToolError
from .ontology import Ontology

METADATA_DELIMITER = ";"


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    description: str = ""
    value_type: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "value_type": self.value_type}


@dataclass(frozen=True)
class ToolSpec:
    tool_id: str
    title: str
    description: str = ""
    parameters: tuple[ParameterSpec, ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __hash__(self):
        return hash(self.tool_id)

    @property
    def text(self) -> str:
        """Title plus description, the document text used for ranking."""
        return f"{self.title}. {self.description}".strip()

    def metadata_values(self, key: str) -> list[str]:
        raw = self.metadata.get(key, "")
        return [v.strip() for v in raw.split(METADATA_DELIMITER) if v.strip()]

    def to_dict(self) -> dict:
        return {
            "tool_id": self.tool_id,
            "title": self.title,
            "description": self.description,
            "parameters": [p.to_dict() for p in self.parameters],
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class Catalog:
    tools: tuple[ToolSpec, ...] = ()
    source_path: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tools", tuple(self.tools))
        seen: dict[str, int] = {}
        for i, tool in enumerate(self.tools):
            if tool.tool_id in seen:
                raise DuplicateToolError(
                    f"duplicate tool_id {tool.tool_id!r} at records {seen[tool.tool_id]} and {i}"
                )
            seen[tool.tool_id] = i

    def __len__(self):
        return len(self.tools)

    def __iter__(self):
        return iter(self.tools)

    def __eq__(self, other):
        # provenance is not part of catalog identity
        return isinstance(other, Catalog) and self.tools == other.tools

    def __getitem__(self, tool_id: str) -> ToolSpec:
        for tool in self.tools:
            if tool.tool_id == tool_id:
                return tool
        raise KeyError(tool_id)

    @property
    def by_id(self) -> dict[str, ToolSpec]:
        return {t.tool_id: t for t in self.tools}

    @property
    def tool_ids(self) -> list[str]:
        return [t.tool_id for t in self.tools]


@dataclass(frozen=True)
class Issue:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


def validate_tool(spec: ToolSpec, ontology: Ontology | None = None) -> list[Issue]:
    """Check one tool against the catalog invariants. Returns [] when valid."""
    ontology = ontology or Ontology.default()
    issues = []
    if not isinstance(spec.tool_id, str) or not spec.tool_id.strip():
        issues.append(Issue("tool_id", "must be a non-empty string"))
    if not isinstance(spec.title, str) or not spec.title.strip():
        issues.append(Issue("title", "must be a non-empty string"))
    if not isinstance(spec.description, str):
        issues.append(Issue("description", "must be a string"))
    names: set[str] = set()
    for i, param in enumerate(spec.parameters):
        if not isinstance(param.name, str) or not param.name.strip():
            issues.append(Issue(f"parameters[{i}].name", "must be a non-empty string"))
        elif param.name in names:
            issues.append(Issue(f"parameters[{i}].name", f"duplicate parameter name {param.name!r}"))
        else:
            names.add(param.name)
    for key, value in spec.metadata.items():
        if key not in ontology.metadata_types:
            issues.append(Issue(f"metadata.{key}", f"key {key!r} is not a metadata entity type of the ontology"))
        elif not isinstance(value, str):
            issues.append(Issue(f"metadata.{key}", "value must be a string"))
    return issues


def _parse_record(obj, index: int) -> ToolSpec:
    def need(mapping, key, kind, where):
        if key not in mapping:
            raise CatalogParseError(f"record {index}: missing field {where}{key!r}")
        value = mapping[key]
        if not isinstance(value, kind):
            raise CatalogParseError(
                f"record {index}: field {where}{key!r} must be {kind.__name__}, got {type(value).__name__}"
            )
        return value

    if not isinstance(obj, dict):
        raise CatalogParseError(f"record {index}: expected an object")
    params = []
    for j, p in enumerate(obj.get("parameters", [])):
        if not isinstance(p, dict):
            raise CatalogParseError(f"record {index}: field 'parameters[{j}]' must be an object")
        where = f"parameters[{j}]."
        params.append(
            ParameterSpec(
                name=need(p, "name", str, where),
                description=p.get("description", "") or "",
                value_type=p.get("value_type", "") or "",
            )
        )
    metadata = obj.get("metadata", {}) or {}
    if not isinstance(metadata, dict):
        raise CatalogParseError(f"record {index}: field 'metadata' must be an object")
    return ToolSpec(
        tool_id=need(obj, "tool_id", str, ""),
        title=need(obj, "title", str, ""),
        description=obj.get("description", "") or "",
        parameters=tuple(params),
        metadata=metadata,
    )


def parse_catalog(text: str, source_path: str = "", ontology: Ontology | None = None) -> Catalog:
    ontology = ontology or Ontology.default()
    tools: list[ToolSpec] = []
    first_seen: dict[str, int] = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        index = len(tools)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CatalogParseError(f"record {index} (line {lineno}): invalid JSON: {exc.msg}") from None
        tool = _parse_record(obj, index)
        if tool.tool_id in first_seen:
            raise DuplicateToolError(
                f"duplicate tool_id {tool.tool_id!r}: records {first_seen[tool.tool_id]} and {index}"
            )
        first_seen[tool.tool_id] = index
        problems.extend(f"record {index} ({tool.tool_id}): {issue}" for issue in validate_tool(tool, ontology))
        tools.append(tool)
    if problems:
        raise CatalogValidationError("invalid catalog:\n  " + "\n  ".join(problems))
    return Catalog(tuple(tools), source_path)


def load_catalog(path, ontology: Ontology | None = None) -> Catalog:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_catalog(text, str(path), ontology)


def dump_catalog(catalog: Catalog) -> str:
    lines = [json.dumps(t.to_dict(), ensure_ascii=False, sort_keys=True) for t in catalog.tools]
    return "".join(line + "\n" for line in lines)


def save_catalog(catalog: Catalog, path) -> None:
    Path(path).write_text(dump_catalog(catalog), encoding="utf-8")


def toy_catalog_path() -> Path:
    """Bundled purchase-order catalog (about twenty tools)."""
    return Path(__file__).parent / "data" / "toy_catalog.jsonl"


def load_toy_catalog() -> Catalog:
    return load_catalog(toy_catalog_path())
